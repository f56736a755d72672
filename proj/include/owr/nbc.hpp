#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "owr/metric.hpp"
#include "owr/nno.hpp"
#include "owr/types.hpp"

namespace owr {

/// Local prototype. Radii live in the same squared-distance units as d_W and
/// only ever shrink: radius == radius_initial * errors^{-1/(2+d_hat)} once a
/// mistake has been made. The very first ball starts with an unset (infinite)
/// radius that the second sample pins to the distance between the two points.
struct Ball {
    FeatureVector center;
    double radius = 0.0;
    double radius_initial = 0.0;
    std::map<ClassId, std::int64_t> class_counts;
    std::int64_t total = 0;
    std::int64_t errors = 0;

    /// argmax_y n_b(y); ties go to the smallest class id.
    ClassId majority_class() const;

    /// n_b(y) / n_b, zero for classes this ball has never absorbed.
    double class_probability(ClassId y) const;
};

/// Per-step record of what train_step decided; lets tests replay a stream
/// against the create/absorb dichotomy and the radius law.
struct TrainTrace {
    enum class Action { CreatedFirst, Created, Absorbed };
    Action action = Action::CreatedFirst;
    std::size_t nearest = 0;           // valid unless CreatedFirst
    double distance = 0.0;             // d_W(x, c_nearest)
    double radius_at_decision = 0.0;   // nearest ball's radius for the test
    std::size_t ball_index = 0;        // created or absorbing ball
    bool mistake = false;
    bool inside = false;
};

/// Online nearest-ball classifier: a growing cover of local prototypes with
/// per-ball class histograms, local RBF confidence, a Hoeffding-widened
/// rejection threshold, and non-linear metric learning through the ball-level
/// softmax posterior.
class NbcClassifier {
public:
    NbcClassifier(std::size_t dim, std::size_t rank, double gamma);

    std::size_t dim() const { return metric_.dim(); }
    double gamma() const { return gamma_; }
    std::size_t d_hat() const { return d_hat_; }
    const LowRankMetric& metric() const { return metric_; }
    LowRankMetric& metric() { return metric_; }
    const std::vector<Ball>& balls() const { return balls_; }
    const NoveltyState& novelty() const { return nov_; }
    NoveltyState& novelty() { return nov_; }
    std::size_t num_classes() const { return known_.size(); }
    bool has_class(ClassId y) const { return known_.count(y) != 0; }

    /// Index and distance of the ball minimizing d_W(x, c_b); ties go to the
    /// earliest-created ball.
    std::pair<std::size_t, double> nearest_ball(const FeatureVector& x) const;

    /// Majority class of the nearest ball.
    ClassId local_predict(const FeatureVector& x) const;

    /// One ball-set update: create the first ball, create a new ball beyond
    /// the nearest radius, or absorb (count update, center on correct
    /// prediction, radius shrink on a mistake).
    TrainTrace train_step(const FeatureVector& x, ClassId y);

    /// Local confidence at the nearest ball:
    ///   p_b*(y) * exp(-d_W(x, c_b*) / (2 eps_b*)).
    double local_confidence(const FeatureVector& x, ClassId y) const;

    /// tau + sqrt(log(t* C) / (2 t*)), the Hoeffding-widened threshold with
    /// delta = 1/(t* C). Returns +inf while t* == 0.
    double hoeffding_threshold() const;

    /// Majority label of the nearest ball, or kUnknownLabel when its local
    /// confidence falls below the Hoeffding-widened threshold.
    OpenPrediction predict_open(const FeatureVector& x) const;

    /// tau update restricted to samples absorbed by their nearest ball;
    /// ball-creating samples leave tau alone, novel classes reset it.
    void update_threshold_local(const FeatureVector& x, ClassId y, std::size_t b_star,
                                bool inside, bool is_novel_class);

    /// Ball-level softmax posterior p_NBC(y|x); balls vote with their
    /// majority class.
    std::map<ClassId, double> posteriors(const FeatureVector& x) const;

    /// Gradient of log p_NBC(y|x) w.r.t. W. Empty when no ball is assigned
    /// to class y (the log-likelihood is -inf there).
    std::optional<Matrix> gradient(const FeatureVector& x, ClassId y) const;

    /// Full stream step: novel-class detection, nearest-ball lookup,
    /// threshold update, ball-set update, then one metric step on the
    /// p_NBC log-likelihood.
    bool learn_open(const FeatureVector& x, ClassId y);

    const TrainTrace& last_trace() const { return last_trace_; }

    /// Frozen models keep growing/updating balls but leave W, tau and t_star
    /// untouched.
    void set_frozen(bool frozen) { frozen_ = frozen; }
    bool frozen() const { return frozen_; }

    void save(const std::string& path) const;
    static NbcClassifier load(const std::string& path);

    /// Snapshot support.
    void set_gamma(double g) { gamma_ = g; }
    void set_d_hat(std::size_t dh) { d_hat_ = dh; }
    void restore_ball(Ball b);

private:
    LowRankMetric metric_;
    std::vector<Ball> balls_;
    double gamma_;
    std::size_t d_hat_;
    NoveltyState nov_;
    std::set<ClassId> known_;
    bool frozen_ = false;
    TrainTrace last_trace_;

    double confidence_at(std::size_t ball_index, double dist, ClassId y) const;
    void fold_tau(double confidence, bool inside, bool is_novel_class);
    void require_nonempty() const;
};

} // namespace owr
