#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "owr/metric.hpp"
#include "owr/types.hpp"

namespace owr {

/// Running per-class mean. `n` counts the samples folded in, including the
/// one that created the class; the stored mean always equals the arithmetic
/// mean of everything seen for this class.
struct ClassMean {
    FeatureVector mu;
    std::int64_t n = 0;
};

/// Online nearest-class-mean classifier: incremental per-class means plus a
/// single stochastic step on the low-rank metric per labeled sample.
/// Closed-set only; the open-world variants wrap this type.
class NcmClassifier {
public:
    NcmClassifier(std::size_t dim, std::size_t rank, double gamma);

    std::size_t dim() const { return metric_.dim(); }
    double gamma() const { return gamma_; }
    const LowRankMetric& metric() const { return metric_; }
    LowRankMetric& metric() { return metric_; }

    std::size_t num_classes() const { return classes_.size(); }
    bool has_class(ClassId y) const { return classes_.count(y) != 0; }
    const std::map<ClassId, ClassMean>& classes() const { return classes_; }

    /// Softmax over -1/2 d_W(x, mu_y). Values sum to 1; each in (0, 1].
    std::map<ClassId, double> class_posteriors(const FeatureVector& x) const;

    /// argmin_y d_W(x, mu_y); ties go to the smallest class id.
    ClassId predict(const FeatureVector& x) const;

    /// Distance to the nearest class mean; the winning id is written to
    /// *which when given.
    double nearest_distance(const FeatureVector& x, ClassId* which = nullptr) const;

    /// Sum over all classes of d_W(x, mu_y), with the current metric.
    double sum_distances(const FeatureVector& x) const;

    /// Running-mean update; creates the class on first sight with mu = x.
    /// Returns false (and skips the sample) when x has non-finite entries.
    bool update_mean(const FeatureVector& x, ClassId y);

    /// Gradient of log p(y|x) with respect to W:
    ///   sum_y' (p(y'|x) - [y'==y]) W (mu_y' - x)(mu_y' - x)^T
    Matrix gradient(const FeatureVector& x, ClassId y) const;

    /// Mean update first, then the gradient with the fresh mean, then one
    /// metric step. Mean updates are kept even when the metric step is
    /// rejected. `update_metric = false` (or gamma == 0) skips the W step.
    bool learn(const FeatureVector& x, ClassId y, bool update_metric = true);

    void save(const std::string& path) const;
    static NcmClassifier load(const std::string& path);

    /// Snapshot support: overwrite a class entry verbatim.
    void set_class(ClassId y, ClassMean cm) { classes_[y] = std::move(cm); }
    void set_gamma(double g) { gamma_ = g; }

private:
    LowRankMetric metric_;
    std::map<ClassId, ClassMean> classes_;
    double gamma_;

    void require_nonempty() const;
};

} // namespace owr
