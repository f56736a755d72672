#include "owr/nbc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "owr/errors.hpp"
#include "owr/log.hpp"

namespace owr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// exp(-d / (2 eps)) with the degenerate corners pinned: a sample at the
// center is fully confident regardless of eps, and a zero-radius ball gives
// zero weight to anything off-center.
double rbf_term(double dist, double eps) {
    if (dist == 0.0) return 1.0;
    return std::exp(-dist / (2.0 * eps));
}
} // namespace

ClassId Ball::majority_class() const {
    ClassId best = kUnknownLabel;
    std::int64_t best_count = -1;
    for (const auto& [id, count] : class_counts) {
        if (count > best_count) { // id-ascending scan: ties keep the smaller id
            best_count = count;
            best = id;
        }
    }
    return best;
}

double Ball::class_probability(ClassId y) const {
    if (total == 0) return 0.0;
    auto it = class_counts.find(y);
    if (it == class_counts.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(total);
}

NbcClassifier::NbcClassifier(std::size_t dim, std::size_t rank, double gamma)
    : metric_(rank, dim), gamma_(gamma), d_hat_(rank) {
    if (gamma < 0.0 || gamma >= 1.0)
        throw InvalidInputError("nbc: gamma must be in [0, 1)");
}

void NbcClassifier::require_nonempty() const {
    if (balls_.empty())
        throw EmptyModelError("nbc: no balls in the model");
}

std::pair<std::size_t, double> NbcClassifier::nearest_ball(const FeatureVector& x) const {
    require_nonempty();
    std::size_t best = 0;
    double best_dist = kInf;
    for (std::size_t i = 0; i < balls_.size(); ++i) {
        const double d = metric_.distance(x, balls_[i].center);
        if (d < best_dist) { // creation-order scan: ties keep the earliest ball
            best_dist = d;
            best = i;
        }
    }
    return {best, best_dist};
}

ClassId NbcClassifier::local_predict(const FeatureVector& x) const {
    auto [bi, dist] = nearest_ball(x);
    (void)dist;
    return balls_[bi].majority_class();
}

TrainTrace NbcClassifier::train_step(const FeatureVector& x, ClassId y) {
    if (x.size() != dim())
        throw InvalidInputError("nbc: sample length mismatch");
    TrainTrace trace;
    if (balls_.empty()) {
        // The create rule needs a nearest ball; the first one starts with an
        // unset radius that the second sample pins.
        Ball b;
        b.center = x;
        b.radius = kInf;
        b.radius_initial = kInf;
        b.class_counts[y] = 1;
        b.total = 1;
        balls_.push_back(std::move(b));
        trace.action = TrainTrace::Action::CreatedFirst;
        trace.ball_index = 0;
        trace.inside = true;
        return trace;
    }

    auto [bi, dist] = nearest_ball(x);
    Ball& nearest = balls_[bi];
    if (std::isinf(nearest.radius_initial)) {
        nearest.radius_initial = dist;
        nearest.radius = dist;
    }
    trace.nearest = bi;
    trace.distance = dist;
    trace.radius_at_decision = nearest.radius;

    if (dist > nearest.radius) {
        Ball b;
        b.center = x;
        b.radius = dist;
        b.radius_initial = dist;
        b.class_counts[y] = 1;
        b.total = 1;
        balls_.push_back(std::move(b));
        trace.action = TrainTrace::Action::Created;
        trace.ball_index = balls_.size() - 1;
        return trace;
    }

    // Absorb. The ball is judged on its pre-update counts.
    const ClassId predicted = nearest.majority_class();
    nearest.class_counts[y] += 1;
    nearest.total += 1;
    if (predicted == y) {
        const double inv = 1.0 / static_cast<double>(nearest.total);
        for (std::size_t j = 0; j < x.size(); ++j)
            nearest.center[j] = (1.0 - inv) * nearest.center[j] + inv * x[j];
    } else {
        nearest.errors += 1;
        nearest.radius = nearest.radius_initial *
                         std::pow(static_cast<double>(nearest.errors),
                                  -1.0 / (2.0 + static_cast<double>(d_hat_)));
    }
    trace.action = TrainTrace::Action::Absorbed;
    trace.ball_index = bi;
    trace.mistake = (predicted != y);
    trace.inside = true;
    return trace;
}

double NbcClassifier::confidence_at(std::size_t ball_index, double dist, ClassId y) const {
    const Ball& b = balls_[ball_index];
    return b.class_probability(y) * rbf_term(dist, b.radius);
}

double NbcClassifier::local_confidence(const FeatureVector& x, ClassId y) const {
    auto [bi, dist] = nearest_ball(x);
    return confidence_at(bi, dist, y);
}

double NbcClassifier::hoeffding_threshold() const {
    if (nov_.t_star < 1) return kInf;
    const double classes = static_cast<double>(known_.empty() ? 1 : known_.size());
    const double ts = static_cast<double>(nov_.t_star);
    const double slack = std::sqrt(std::log(ts * classes) / (2.0 * ts));
    return nov_.tau + slack;
}

OpenPrediction NbcClassifier::predict_open(const FeatureVector& x) const {
    auto [bi, dist] = nearest_ball(x);
    const ClassId predicted = balls_[bi].majority_class();
    const double conf = confidence_at(bi, dist, predicted);
    if (conf < hoeffding_threshold()) return {kUnknownLabel, conf};
    return {predicted, conf};
}

void NbcClassifier::fold_tau(double confidence, bool inside, bool is_novel_class) {
    if (is_novel_class) {
        nov_.tau = 0.0;
        nov_.t_star = 0;
        return;
    }
    if (!inside) return; // ball-creating samples never feed tau
    nov_.t_star += 1;
    const double inv = 1.0 / static_cast<double>(nov_.t_star);
    nov_.tau = (1.0 - inv) * nov_.tau + inv * confidence;
}

void NbcClassifier::update_threshold_local(const FeatureVector& x, ClassId y,
                                           std::size_t b_star, bool inside,
                                           bool is_novel_class) {
    double conf = 0.0;
    if (!is_novel_class && inside && b_star < balls_.size())
        conf = confidence_at(b_star, metric_.distance(x, balls_[b_star].center), y);
    fold_tau(conf, inside, is_novel_class);
}

std::map<ClassId, double> NbcClassifier::posteriors(const FeatureVector& x) const {
    require_nonempty();
    std::vector<double> logits(balls_.size());
    double best = -kInf;
    for (std::size_t i = 0; i < balls_.size(); ++i) {
        logits[i] = -0.5 * metric_.distance(x, balls_[i].center);
        if (logits[i] > best) best = logits[i];
    }
    std::map<ClassId, double> out;
    double z = 0.0;
    for (std::size_t i = 0; i < balls_.size(); ++i) {
        const double e = std::exp(logits[i] - best);
        out[balls_[i].majority_class()] += e;
        z += e;
    }
    for (auto& [id, p] : out)
        p /= z;
    return out;
}

std::optional<Matrix> NbcClassifier::gradient(const FeatureVector& x, ClassId y) const {
    require_nonempty();
    const std::size_t m = metric_.rank();
    const std::size_t d = metric_.dim();

    std::vector<double> weights(balls_.size());
    double best = -kInf;
    for (std::size_t i = 0; i < balls_.size(); ++i) {
        weights[i] = -0.5 * metric_.distance(x, balls_[i].center);
        if (weights[i] > best) best = weights[i];
    }
    double z_all = 0.0;
    double z_y = 0.0;
    std::vector<bool> in_class(balls_.size(), false);
    for (std::size_t i = 0; i < balls_.size(); ++i) {
        weights[i] = std::exp(weights[i] - best);
        z_all += weights[i];
        if (balls_[i].majority_class() == y) {
            in_class[i] = true;
            z_y += weights[i];
        }
    }
    if (z_y <= 0.0) return std::nullopt; // p_NBC(y|x) = 0: log-likelihood undefined

    Matrix grad(m, d);
    std::vector<double> diff(d);
    for (std::size_t i = 0; i < balls_.size(); ++i) {
        const double coeff = weights[i] / z_all - (in_class[i] ? weights[i] / z_y : 0.0);
        if (coeff == 0.0) continue;
        const FeatureVector& c = balls_[i].center;
        for (std::size_t j = 0; j < d; ++j)
            diff[j] = c[j] - x[j];
        std::vector<double> wdiff = metric_.project(diff);
        for (std::size_t r = 0; r < m; ++r) {
            const double s = coeff * wdiff[r];
            double* row = &grad.data[r * d];
            for (std::size_t j = 0; j < d; ++j)
                row[j] += s * diff[j];
        }
    }
    return grad;
}

bool NbcClassifier::learn_open(const FeatureVector& x, ClassId y) {
    if (x.size() != dim())
        throw InvalidInputError("nbc: sample length mismatch");
    if (!all_finite(x)) {
        log::warn("nbc: skipping sample with non-finite features");
        return false;
    }
    const bool was_empty = balls_.empty();
    const bool novel = known_.insert(y).second;

    double conf = 0.0;
    bool inside = false;
    if (!was_empty) {
        auto [bi, dist] = nearest_ball(x);
        inside = dist <= balls_[bi].radius;
        if (inside && !novel) conf = confidence_at(bi, dist, y);
    }
    if (!frozen_) fold_tau(conf, inside, novel);

    last_trace_ = train_step(x, y);
    if (!was_empty) nov_.t += 1;

    if (!frozen_ && gamma_ > 0.0) {
        auto grad = gradient(x, y);
        if (grad.has_value()) {
            if (!metric_.sgd_step(*grad, gamma_))
                log::warn("nbc: metric update rejected, keeping previous W");
        } else {
            log::debug("nbc: no ball assigned to class " + std::to_string(y) +
                       ", metric step skipped");
        }
    }
    return true;
}

void NbcClassifier::restore_ball(Ball b) {
    for (const auto& [id, count] : b.class_counts) {
        (void)count;
        known_.insert(id);
    }
    balls_.push_back(std::move(b));
}

} // namespace owr
