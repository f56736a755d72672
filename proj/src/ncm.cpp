#include "owr/ncm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "owr/errors.hpp"
#include "owr/log.hpp"

namespace owr {

NcmClassifier::NcmClassifier(std::size_t dim, std::size_t rank, double gamma)
    : metric_(rank, dim), gamma_(gamma) {
    if (gamma < 0.0 || gamma >= 1.0)
        throw InvalidInputError("ncm: gamma must be in [0, 1)");
}

void NcmClassifier::require_nonempty() const {
    if (classes_.empty())
        throw EmptyModelError("ncm: no classes in the model");
}

std::map<ClassId, double> NcmClassifier::class_posteriors(const FeatureVector& x) const {
    require_nonempty();
    // Softmax over -1/2 d_W with max subtraction; analytically unchanged.
    std::map<ClassId, double> logits;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [id, cm] : classes_) {
        double l = -0.5 * metric_.distance(x, cm.mu);
        logits.emplace(id, l);
        if (l > best) best = l;
    }
    double z = 0.0;
    for (auto& [id, l] : logits) {
        l = std::exp(l - best);
        z += l;
    }
    for (auto& [id, l] : logits)
        l /= z;
    return logits;
}

ClassId NcmClassifier::predict(const FeatureVector& x) const {
    ClassId which = kUnknownLabel;
    nearest_distance(x, &which);
    return which;
}

double NcmClassifier::nearest_distance(const FeatureVector& x, ClassId* which) const {
    require_nonempty();
    double best = std::numeric_limits<double>::infinity();
    ClassId best_id = kUnknownLabel;
    // Map iteration is id-ascending, so strict < keeps the smallest id on ties.
    for (const auto& [id, cm] : classes_) {
        double dist = metric_.distance(x, cm.mu);
        if (dist < best) {
            best = dist;
            best_id = id;
        }
    }
    if (which != nullptr) *which = best_id;
    return best;
}

double NcmClassifier::sum_distances(const FeatureVector& x) const {
    require_nonempty();
    double total = 0.0;
    for (const auto& [id, cm] : classes_)
        total += metric_.distance(x, cm.mu);
    return total;
}

bool NcmClassifier::update_mean(const FeatureVector& x, ClassId y) {
    if (x.size() != dim())
        throw InvalidInputError("ncm: sample length mismatch");
    if (!all_finite(x)) {
        log::warn("ncm: skipping sample with non-finite features");
        return false;
    }
    auto it = classes_.find(y);
    if (it == classes_.end()) {
        classes_.emplace(y, ClassMean{x, 1});
        return true;
    }
    ClassMean& cm = it->second;
    cm.n += 1; // count includes the current sample
    const double inv = 1.0 / static_cast<double>(cm.n);
    for (std::size_t j = 0; j < x.size(); ++j)
        cm.mu[j] = (1.0 - inv) * cm.mu[j] + inv * x[j];
    return true;
}

Matrix NcmClassifier::gradient(const FeatureVector& x, ClassId y) const {
    require_nonempty();
    if (!has_class(y))
        throw InvalidInputError("ncm: gradient for unknown class " + std::to_string(y));
    const std::size_t m = metric_.rank();
    const std::size_t d = metric_.dim();
    auto post = class_posteriors(x);
    Matrix grad(m, d);
    std::vector<double> diff(d);
    for (const auto& [id, cm] : classes_) {
        const double coeff = post[id] - (id == y ? 1.0 : 0.0);
        if (coeff == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j)
            diff[j] = cm.mu[j] - x[j];
        std::vector<double> wdiff = metric_.project(diff);
        for (std::size_t i = 0; i < m; ++i) {
            const double c = coeff * wdiff[i];
            double* row = &grad.data[i * d];
            for (std::size_t j = 0; j < d; ++j)
                row[j] += c * diff[j];
        }
    }
    return grad;
}

bool NcmClassifier::learn(const FeatureVector& x, ClassId y, bool update_metric) {
    if (!update_mean(x, y)) return false;
    if (!update_metric || gamma_ == 0.0) return true;
    Matrix grad = gradient(x, y);
    if (!metric_.sgd_step(grad, gamma_))
        log::warn("ncm: metric update rejected, keeping previous W");
    return true;
}

} // namespace owr
