#include "owr/metric.hpp"

#include <algorithm>
#include <string>

#include "owr/errors.hpp"
#include "owr/log.hpp"

namespace owr {

LowRankMetric::LowRankMetric(std::size_t rank, std::size_t dim) : w_(rank, dim) {
    if (rank == 0 || dim == 0)
        throw InvalidInputError("metric: rank and dim must be positive");
    if (rank > dim)
        throw InvalidInputError("metric: rank " + std::to_string(rank) + " exceeds dim " +
                                std::to_string(dim));
    for (std::size_t i = 0; i < rank; ++i)
        w_(i, i) = 1.0;
}

double LowRankMetric::distance(const FeatureVector& x, const FeatureVector& mu) const {
    const std::size_t d = dim();
    if (x.size() != d || mu.size() != d)
        throw InvalidInputError("metric: distance() expects vectors of length " +
                                std::to_string(d));
    double total = 0.0;
    for (std::size_t i = 0; i < rank(); ++i) {
        const double* row = &w_.data[i * d];
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            acc += row[j] * (x[j] - mu[j]);
        total += acc * acc;
    }
    return total;
}

std::vector<double> LowRankMetric::project(const FeatureVector& v) const {
    const std::size_t d = dim();
    if (v.size() != d)
        throw InvalidInputError("metric: project() expects a vector of length " +
                                std::to_string(d));
    std::vector<double> out(rank(), 0.0);
    for (std::size_t i = 0; i < rank(); ++i) {
        const double* row = &w_.data[i * d];
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

bool LowRankMetric::sgd_step(const Matrix& gradient, double gamma) {
    if (!gradient.same_shape(w_))
        throw InvalidInputError("metric: gradient shape mismatch");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw InvalidInputError("metric: gamma must be in (0, 1)");
    if (!gradient.all_finite()) {
        log::warn("metric: rejecting sgd step with non-finite gradient");
        return false;
    }
    for (std::size_t k = 0; k < w_.data.size(); ++k)
        w_.data[k] = (1.0 - gamma) * w_.data[k] + gamma * gradient.data[k];
    return true;
}

void LowRankMetric::set_w(Matrix w) {
    if (!w.same_shape(w_))
        throw InvalidInputError("metric: set_w shape mismatch");
    w_ = std::move(w);
}

std::size_t default_rank(std::size_t dim) {
    return std::min<std::size_t>(dim, 256);
}

} // namespace owr
