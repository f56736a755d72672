#pragma once

#include <cstddef>

#include "owr/matrix.hpp"
#include "owr/types.hpp"

namespace owr {

/// Low-rank Mahalanobis metric: squared distance ||W(x - mu)||^2 with W an
/// m x d projection, m <= d. Freshly constructed W is the truncated identity,
/// so the metric starts out as plain squared Euclidean distance on the first
/// m coordinates.
class LowRankMetric {
public:
    LowRankMetric(std::size_t rank, std::size_t dim);

    std::size_t rank() const { return w_.rows; }
    std::size_t dim() const { return w_.cols; }
    const Matrix& w() const { return w_; }

    /// (x - mu)^T W^T W (x - mu). Throws InvalidInputError on length mismatch.
    double distance(const FeatureVector& x, const FeatureVector& mu) const;

    /// W v, length m. distance(x, mu) equals the squared L2 norm of
    /// project(x) - project(mu).
    std::vector<double> project(const FeatureVector& v) const;

    /// W <- (1 - gamma) W + gamma G. Returns false and keeps the previous W
    /// when G contains non-finite entries. Requires 0 < gamma < 1 and G of
    /// shape m x d.
    bool sgd_step(const Matrix& gradient, double gamma);

    /// Replaces W wholesale (snapshot loading). Shape must match.
    void set_w(Matrix w);

private:
    Matrix w_;
};

/// Default projected dimension when none is configured: min(d, 256).
std::size_t default_rank(std::size_t dim);

} // namespace owr
