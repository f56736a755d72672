#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "owr/dataio.hpp"
#include "owr/eval.hpp"
#include "owr/nbc.hpp"
#include "owr/ncm.hpp"
#include "owr/nno.hpp"
#include "owr/types.hpp"

namespace owr {

enum class Scenario { IncrementalS1, OpenWorldS2, StreamS3, Custom };
enum class VolumeProfile { Flat, Peaked };

/// Knobs for the three evaluation protocols. Defaults (per scenario, see
/// default_config) match the original setups: S1 starts from 20 classes and
/// adds batches of 10; S2 starts from 50 and adds 50 per iteration; S3 runs
/// 40 segments introducing 5 known + 5 unknown classes per segment for the
/// first half, 60 images per active class per segment, classes drying up
/// after 20 segments, with a mid-stream volume peak.
struct ScenarioConfig {
    Scenario scenario = Scenario::StreamS3;
    std::uint64_t seed = 0;
    int initial_classes = 20;
    int batch_classes = 10;
    std::vector<int> eval_points = {100, 500, 1000};
    int segments = 40;
    int known_per_segment = 5;
    int unknown_per_segment = 5;
    int images_per_class_per_segment = 60;
    int class_lifetime_segments = 20;
    VolumeProfile volume_profile = VolumeProfile::Peaked;
    int known_classes = 100;    // size of the known-eligible pool (S3)
    double test_fraction = 0.2; // held-out share (S1/S2)
};

ScenarioConfig default_config(Scenario s);

Scenario scenario_from_string(const std::string& s);
std::string to_string(Scenario s);

/// One stream arrival. `known` is protocol ground truth: whether the class
/// had already been taught to the learner when this event is predicted.
/// `trainable` marks events whose label is fed back to the learner
/// (unknown-pool classes are metered only).
struct StreamEvent {
    FeatureVector x;
    ClassId y = 0;
    bool known = false;
    bool trainable = true;
    int segment = 1;
};

struct LabeledSample {
    FeatureVector x;
    ClassId y = 0;
};

struct TrainBatch {
    std::vector<LabeledSample> samples;
    std::vector<ClassId> classes_added;
};

struct Scenario1Plan {
    std::vector<TrainBatch> batches;
    std::vector<LabeledSample> test;
    std::map<ClassId, std::vector<std::size_t>> test_by_class;
    // (batch index, cumulative class count) pairs at which evaluation fires
    std::vector<std::pair<std::size_t, int>> eval_after_batch;
};

struct Scenario2Plan {
    std::vector<TrainBatch> iterations;
    std::vector<LabeledSample> test;
    std::map<ClassId, std::vector<std::size_t>> test_by_class;
    std::vector<ClassId> class_order; // classes enter the known set in this order
};

Scenario1Plan generate_scenario1(const ScenarioConfig& cfg, const FeatureSet& fs);
Scenario2Plan generate_scenario2(const ScenarioConfig& cfg, const FeatureSet& fs);
std::vector<StreamEvent> generate_scenario3(const ScenarioConfig& cfg, const FeatureSet& fs);

/// Seeded class order shared by the generators and the whitening setup.
std::vector<ClassId> shuffled_class_ids(const FeatureSet& fs, std::uint64_t seed);

/// Per-segment multiplier on the per-class image quota. Flat is identically
/// 1; Peaked is a triangle peaking mid-stream with mean 1, so the configured
/// per-segment quota holds on average.
double volume_multiplier(VolumeProfile profile, int segment, int segments);

// ---------------------------------------------------------------------------
// Protocol runner
// ---------------------------------------------------------------------------

/// Streaming learner as Algorithm-1 sees it: predict (possibly "unknown"),
/// then receive the label. Wrappers return kUnknownLabel with confidence 0
/// instead of failing while the model is still empty.
class OnlineLearner {
public:
    virtual ~OnlineLearner() = default;
    virtual OpenPrediction predict_open(const FeatureVector& x) const = 0;
    virtual bool learn(const FeatureVector& x, ClassId y) = 0;
    virtual double current_threshold() const = 0;
    virtual void on_segment_end(int segment) { (void)segment; }
    virtual std::string name() const = 0;
};

class NcmLearner : public OnlineLearner {
public:
    NcmLearner(std::size_t dim, std::size_t rank, double gamma) : clf_(dim, rank, gamma) {}
    OpenPrediction predict_open(const FeatureVector& x) const override;
    bool learn(const FeatureVector& x, ClassId y) override { return clf_.learn(x, y); }
    double current_threshold() const override { return 0.0; }
    std::string name() const override { return "oncm"; }
    NcmClassifier& classifier() { return clf_; }
    const NcmClassifier& classifier() const { return clf_; }

private:
    NcmClassifier clf_;
};

class OnnoLearner : public OnlineLearner {
public:
    OnnoLearner(std::size_t dim, std::size_t rank, double gamma, int freeze_after_segment = 0)
        : clf_(dim, rank, gamma), freeze_after_(freeze_after_segment) {}
    OpenPrediction predict_open(const FeatureVector& x) const override;
    bool learn(const FeatureVector& x, ClassId y) override { return clf_.learn_open(x, y); }
    double current_threshold() const override { return clf_.novelty().tau; }
    void on_segment_end(int segment) override;
    std::string name() const override { return freeze_after_ > 0 ? "onno-fixed" : "onno"; }
    OnnoClassifier& classifier() { return clf_; }
    const OnnoClassifier& classifier() const { return clf_; }

private:
    OnnoClassifier clf_;
    int freeze_after_;
};

class NbcLearner : public OnlineLearner {
public:
    NbcLearner(std::size_t dim, std::size_t rank, double gamma, int freeze_after_segment = 0)
        : clf_(dim, rank, gamma), freeze_after_(freeze_after_segment) {}
    OpenPrediction predict_open(const FeatureVector& x) const override;
    bool learn(const FeatureVector& x, ClassId y) override { return clf_.learn_open(x, y); }
    double current_threshold() const override { return clf_.hoeffding_threshold(); }
    void on_segment_end(int segment) override;
    std::string name() const override { return freeze_after_ > 0 ? "onbc-fixed" : "onbc"; }
    NbcClassifier& classifier() { return clf_; }
    const NbcClassifier& classifier() const { return clf_; }

private:
    NbcClassifier clf_;
    int freeze_after_;
};

struct EventRecord {
    int segment = 1;
    ClassId truth = 0;
    ClassId predicted = kUnknownLabel;
    bool known = false;
    bool trained = false;
    double confidence = 0.0;
    double threshold = 0.0;
};

struct ProtocolResult {
    std::vector<SegmentReport> segments;
    std::vector<EventRecord> events;
    OpenWorldScore final_score;
};

/// Algorithm-1 loop: predict with the current model, meter, then update.
/// Learner failures are logged and the stream continues.
ProtocolResult run_protocol(OnlineLearner& learner, const std::vector<StreamEvent>& stream);

} // namespace owr
