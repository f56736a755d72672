#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "owr/types.hpp"

namespace owr {

/// Prequential accuracy: running mean of hit indicators,
///   A_t = (1 - 1/t) A_{t-1} + (1/t) [hit].
class OnlineAccuracy {
public:
    void record(bool hit) {
        count_ += 1;
        const double inv = 1.0 / static_cast<double>(count_);
        value_ = (1.0 - inv) * value_ + inv * (hit ? 1.0 : 0.0);
    }
    double value() const { return value_; }
    std::int64_t count() const { return count_; }

private:
    double value_ = 0.0;
    std::int64_t count_ = 0;
};

/// 2ab / (a + b), defined as 0 when a + b == 0.
double harmonic_mean(double a, double b);

struct PredictionOutcome {
    ClassId predicted = kUnknownLabel;
    ClassId truth = kUnknownLabel;
    bool known = false; // protocol ground truth: was truth in the known universe
};

struct OpenWorldScore {
    double closed_acc = 0.0;
    double open_acc = 0.0;
    double harmonic = 0.0;
};

/// Closed stream counts predicted == truth over known samples; open stream
/// counts predicted == kUnknownLabel over unknown samples.
OpenWorldScore score_open_world(std::span<const PredictionOutcome> outcomes);

/// Per-segment record of an open-world protocol run. Accuracies are
/// cumulative, sampled at the segment boundary; the seg_* fields carry the
/// per-segment deltas. Confidence/threshold means are arithmetic means over
/// the segment's samples, taken at prediction time.
struct SegmentReport {
    int segment = 0;
    std::int64_t samples = 0;
    double closed_acc = 0.0;
    double open_acc = 0.0;
    double harmonic = 0.0;
    double seg_closed_acc = 0.0;
    double seg_open_acc = 0.0;
    double mean_closed_confidence = 0.0;
    double mean_open_confidence = 0.0;
    double mean_threshold = 0.0;
};

/// One JSON record per line, stable field order, non-finite reals encoded as
/// strings ("inf", "-inf", "nan").
std::string segment_report_jsonl(const SegmentReport& r);

/// Plot-ready row: segment, closed, open, harmonic, cc, oc, thr.
std::string segment_report_tsv_header();
std::string segment_report_tsv(const SegmentReport& r);

} // namespace owr
