#include "owr/eval.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace owr {

double harmonic_mean(double a, double b) {
    if (a + b == 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

OpenWorldScore score_open_world(std::span<const PredictionOutcome> outcomes) {
    OnlineAccuracy closed;
    OnlineAccuracy open;
    for (const PredictionOutcome& o : outcomes) {
        if (o.known)
            closed.record(o.predicted == o.truth);
        else
            open.record(o.predicted == kUnknownLabel);
    }
    return {closed.value(), open.value(), harmonic_mean(closed.value(), open.value())};
}

namespace {

nlohmann::ordered_json encode_real(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

std::string segment_report_jsonl(const SegmentReport& r) {
    nlohmann::ordered_json j;
    j["segment"] = r.segment;
    j["samples"] = r.samples;
    j["closed_acc"] = encode_real(r.closed_acc);
    j["open_acc"] = encode_real(r.open_acc);
    j["harmonic"] = encode_real(r.harmonic);
    j["seg_closed_acc"] = encode_real(r.seg_closed_acc);
    j["seg_open_acc"] = encode_real(r.seg_open_acc);
    j["cc"] = encode_real(r.mean_closed_confidence);
    j["oc"] = encode_real(r.mean_open_confidence);
    j["thr"] = encode_real(r.mean_threshold);
    return j.dump();
}

std::string segment_report_tsv_header() {
    return "segment\tclosed\topen\tharmonic\tcc\toc\tthr";
}

std::string segment_report_tsv(const SegmentReport& r) {
    std::string out = std::to_string(r.segment);
    for (double v : {r.closed_acc, r.open_acc, r.harmonic, r.mean_closed_confidence,
                     r.mean_open_confidence, r.mean_threshold}) {
        out += '\t';
        out += format_real(v);
    }
    return out;
}

} // namespace owr
