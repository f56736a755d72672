#pragma once

#include <cstdint>
#include <string>

#include "owr/ncm.hpp"
#include "owr/types.hpp"

namespace owr {

/// Self-tuned novelty state shared by the open-world learners.
///   theta  — RBF bandwidth, running mean of per-sample sums of distances to
///            all class means (starts at 1).
///   tau    — rejection threshold, running mean of true-class confidences
///            since the last novel class (resets to 0 on a novel class).
///   t      — recursion index for theta; equals total samples seen.
///   t_star — samples folded into tau since the last novel class.
struct NoveltyState {
    double theta = 1.0;
    double tau = 0.0;
    std::int64_t t = 1;
    std::int64_t t_star = 0;
};

/// Online nearest-non-outlier: oNCM plus an RBF prediction confidence with
/// self-tuned bandwidth and rejection threshold. Predicts kUnknownLabel when
/// the nearest class is not confident enough.
class OnnoClassifier {
public:
    OnnoClassifier(std::size_t dim, std::size_t rank, double gamma);

    const NcmClassifier& ncm() const { return ncm_; }
    NcmClassifier& ncm() { return ncm_; }
    const NoveltyState& novelty() const { return nov_; }
    NoveltyState& novelty() { return nov_; }

    /// C_y(x) = exp(-d_W(x, mu_y) / (2 theta)), strictly in (0, 1].
    double rbf_confidence(const FeatureVector& x, ClassId y) const;

    /// Original fixed-threshold NNO confidence:
    ///   Z_tau (1 - d_W(x, mu_y) / tau_fixed),
    /// negative past the rejection boundary d_W = tau_fixed.
    double baseline_nno_score(const FeatureVector& x, ClassId y, double tau_fixed) const;

    /// Z_tau = Gamma(m/2 + 1) / (pi^{m/2} tau^m).
    static double nno_normalizer(std::size_t rank, double tau_fixed);

    /// theta <- (1 - 1/t) theta + (1/t) sum_y d_W(x, mu_y); increments t.
    void update_bandwidth(const FeatureVector& x);

    /// Novel class: tau <- 0, t_star <- 0. Otherwise fold `confidence` into
    /// the running mean with the incremented t_star.
    void update_threshold(double confidence, bool is_novel_class);

    /// Nearest class by d_W; kUnknownLabel when C_{y*} <= tau. Empty model
    /// throws EmptyModelError.
    OpenPrediction predict_open(const FeatureVector& x) const;

    /// One labeled stream step: novel-class detection, bandwidth update with
    /// the pre-update means, threshold update with the prediction-time
    /// confidence of the true class, then the oNCM mean + metric updates.
    bool learn_open(const FeatureVector& x, ClassId y);

    /// Frozen models keep updating class means (and add novel classes') but
    /// leave W, theta, tau and t_star untouched.
    void set_frozen(bool frozen) { frozen_ = frozen; }
    bool frozen() const { return frozen_; }

    void save(const std::string& path) const;
    static OnnoClassifier load(const std::string& path);

private:
    NcmClassifier ncm_;
    NoveltyState nov_;
    bool frozen_ = false;
};

} // namespace owr
