#include "owr/nno.hpp"

#include <cmath>
#include <string>

#include "owr/errors.hpp"
#include "owr/log.hpp"

namespace owr {

OnnoClassifier::OnnoClassifier(std::size_t dim, std::size_t rank, double gamma)
    : ncm_(dim, rank, gamma) {}

double OnnoClassifier::rbf_confidence(const FeatureVector& x, ClassId y) const {
    auto it = ncm_.classes().find(y);
    if (it == ncm_.classes().end())
        throw InvalidInputError("nno: confidence for unknown class " + std::to_string(y));
    const double d = ncm_.metric().distance(x, it->second.mu);
    return std::exp(-d / (2.0 * nov_.theta));
}

double OnnoClassifier::nno_normalizer(std::size_t rank, double tau_fixed) {
    if (tau_fixed <= 0.0)
        throw InvalidInputError("nno: tau_fixed must be positive");
    const double half_m = static_cast<double>(rank) / 2.0;
    // Evaluated in log space; Z can overflow tgamma for large m otherwise.
    const double log_z = std::lgamma(half_m + 1.0) - half_m * std::log(M_PI) -
                         static_cast<double>(rank) * std::log(tau_fixed);
    return std::exp(log_z);
}

double OnnoClassifier::baseline_nno_score(const FeatureVector& x, ClassId y,
                                          double tau_fixed) const {
    auto it = ncm_.classes().find(y);
    if (it == ncm_.classes().end())
        throw InvalidInputError("nno: score for unknown class " + std::to_string(y));
    const double z = nno_normalizer(ncm_.metric().rank(), tau_fixed);
    const double d = ncm_.metric().distance(x, it->second.mu);
    return z * (1.0 - d / tau_fixed);
}

void OnnoClassifier::update_bandwidth(const FeatureVector& x) {
    if (ncm_.num_classes() == 0)
        throw EmptyModelError("nno: bandwidth update needs at least one class");
    const double sum = ncm_.sum_distances(x);
    const double inv = 1.0 / static_cast<double>(nov_.t);
    nov_.theta = (1.0 - inv) * nov_.theta + inv * sum;
    nov_.t += 1;
}

void OnnoClassifier::update_threshold(double confidence, bool is_novel_class) {
    if (is_novel_class) {
        nov_.tau = 0.0;
        nov_.t_star = 0;
        return;
    }
    nov_.t_star += 1;
    const double inv = 1.0 / static_cast<double>(nov_.t_star);
    nov_.tau = (1.0 - inv) * nov_.tau + inv * confidence;
}

OpenPrediction OnnoClassifier::predict_open(const FeatureVector& x) const {
    ClassId nearest = kUnknownLabel;
    const double d = ncm_.nearest_distance(x, &nearest);
    const double conf = std::exp(-d / (2.0 * nov_.theta));
    if (conf <= nov_.tau) return {kUnknownLabel, conf};
    return {nearest, conf};
}

bool OnnoClassifier::learn_open(const FeatureVector& x, ClassId y) {
    if (x.size() != ncm_.dim())
        throw InvalidInputError("nno: sample length mismatch");
    if (!all_finite(x)) {
        log::warn("nno: skipping sample with non-finite features");
        return false;
    }
    const bool novel = !ncm_.has_class(y);
    // The threshold folds in the confidence the model would have reported
    // at prediction time, so it is taken before theta or the means move.
    double conf = 0.0;
    if (!novel) conf = rbf_confidence(x, y);
    // No classes yet means the sum over Y is empty; theta stays at its
    // initial value until the second sample. A frozen model fixes W and tau
    // only: means and bandwidth keep tracking the stream.
    if (ncm_.num_classes() > 0) update_bandwidth(x);
    if (!frozen_) update_threshold(conf, novel);
    return ncm_.learn(x, y, /*update_metric=*/!frozen_);
}

} // namespace owr
