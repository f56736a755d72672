#include "owr/stream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "owr/errors.hpp"
#include "owr/log.hpp"

namespace owr {

ScenarioConfig default_config(Scenario s) {
    ScenarioConfig cfg;
    cfg.scenario = s;
    switch (s) {
        case Scenario::IncrementalS1:
            cfg.initial_classes = 20;
            cfg.batch_classes = 10;
            cfg.eval_points = {100, 500, 1000};
            break;
        case Scenario::OpenWorldS2:
            cfg.initial_classes = 50;
            cfg.batch_classes = 50;
            cfg.eval_points.clear();
            break;
        case Scenario::StreamS3:
        case Scenario::Custom:
            break;
    }
    return cfg;
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "s1") return Scenario::IncrementalS1;
    if (s == "s2") return Scenario::OpenWorldS2;
    if (s == "s3") return Scenario::StreamS3;
    if (s == "custom") return Scenario::Custom;
    throw ConfigError("unknown scenario '" + s + "' (expected s1, s2, s3 or custom)");
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::IncrementalS1: return "s1";
        case Scenario::OpenWorldS2: return "s2";
        case Scenario::StreamS3: return "s3";
        case Scenario::Custom: return "custom";
    }
    return "?";
}

std::vector<ClassId> shuffled_class_ids(const FeatureSet& fs, std::uint64_t seed) {
    std::vector<ClassId> ids = fs.class_ids();
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    return ids;
}

double volume_multiplier(VolumeProfile profile, int segment, int segments) {
    if (profile == VolumeProfile::Flat) return 1.0;
    const double peak = (segments + 1) / 2.0;
    auto tri = [&](int s) { return 1.0 - std::abs(s - peak) / peak; };
    double mean = 0.0;
    for (int s = 1; s <= segments; ++s)
        mean += tri(s);
    mean /= segments;
    return tri(segment) / mean;
}

namespace {

// Seeded per-class train/test split; test gets ceil(fraction * count), but
// always leaves at least one training sample.
struct SplitSet {
    std::map<ClassId, std::vector<std::size_t>> train;
    std::map<ClassId, std::vector<std::size_t>> test;
};

SplitSet split_train_test(const FeatureSet& fs, double test_fraction, std::mt19937_64& rng) {
    SplitSet out;
    for (const auto& [id, rows] : fs.class_index) {
        std::vector<std::size_t> shuffled = rows;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::size_t n_test = static_cast<std::size_t>(
            std::ceil(test_fraction * static_cast<double>(shuffled.size())));
        if (n_test >= shuffled.size()) n_test = shuffled.size() - 1;
        out.test[id].assign(shuffled.begin(), shuffled.begin() + n_test);
        out.train[id].assign(shuffled.begin() + n_test, shuffled.end());
    }
    return out;
}

LabeledSample make_sample(const FeatureSet& fs, std::size_t row) {
    return {fs.row_double(row), fs.labels[row]};
}

} // namespace

Scenario1Plan generate_scenario1(const ScenarioConfig& cfg, const FeatureSet& fs) {
    if (cfg.initial_classes < 1 || cfg.batch_classes < 1)
        throw ConfigError("scenario 1: class counts must be positive");
    const int total_classes = static_cast<int>(fs.num_classes());
    if (!cfg.eval_points.empty()) {
        int max_eval = *std::max_element(cfg.eval_points.begin(), cfg.eval_points.end());
        if (max_eval > total_classes)
            throw ConfigError("scenario 1: eval point " + std::to_string(max_eval) +
                              " exceeds the dataset's " + std::to_string(total_classes) +
                              " classes");
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<ClassId> order = fs.class_ids();
    std::shuffle(order.begin(), order.end(), rng);
    SplitSet split = split_train_test(fs, cfg.test_fraction, rng);

    Scenario1Plan plan;
    for (const auto& [id, rows] : split.test) {
        for (std::size_t r : rows) {
            plan.test_by_class[id].push_back(plan.test.size());
            plan.test.push_back(make_sample(fs, r));
        }
    }

    std::size_t cursor = 0;
    int cumulative = 0;
    auto emit_batch = [&](int count) {
        TrainBatch batch;
        for (int k = 0; k < count && cursor < order.size(); ++k, ++cursor) {
            ClassId id = order[cursor];
            batch.classes_added.push_back(id);
            for (std::size_t r : split.train[id])
                batch.samples.push_back(make_sample(fs, r));
        }
        std::shuffle(batch.samples.begin(), batch.samples.end(), rng);
        cumulative += static_cast<int>(batch.classes_added.size());
        plan.batches.push_back(std::move(batch));
    };

    emit_batch(cfg.initial_classes);
    while (cursor < order.size())
        emit_batch(cfg.batch_classes);

    std::vector<int> points = cfg.eval_points;
    std::sort(points.begin(), points.end());
    cumulative = 0;
    std::size_t next_point = 0;
    for (std::size_t b = 0; b < plan.batches.size() && next_point < points.size(); ++b) {
        cumulative += static_cast<int>(plan.batches[b].classes_added.size());
        while (next_point < points.size() && cumulative >= points[next_point]) {
            plan.eval_after_batch.emplace_back(b, cumulative);
            ++next_point;
        }
    }
    return plan;
}

Scenario2Plan generate_scenario2(const ScenarioConfig& cfg, const FeatureSet& fs) {
    if (cfg.initial_classes < 1 || cfg.batch_classes < 1)
        throw ConfigError("scenario 2: class counts must be positive");
    const int total_classes = static_cast<int>(fs.num_classes());
    if (cfg.initial_classes > total_classes)
        throw ConfigError("scenario 2: needs >= " + std::to_string(cfg.initial_classes) +
                          " classes, dataset has " + std::to_string(total_classes));

    std::mt19937_64 rng(cfg.seed);
    std::vector<ClassId> order = fs.class_ids();
    std::shuffle(order.begin(), order.end(), rng);
    SplitSet split = split_train_test(fs, cfg.test_fraction, rng);

    Scenario2Plan plan;
    plan.class_order = order;
    for (const auto& [id, rows] : split.test) {
        for (std::size_t r : rows) {
            plan.test_by_class[id].push_back(plan.test.size());
            plan.test.push_back(make_sample(fs, r));
        }
    }

    std::size_t cursor = 0;
    auto emit_iteration = [&](int count) {
        TrainBatch batch;
        for (int k = 0; k < count && cursor < order.size(); ++k, ++cursor) {
            ClassId id = order[cursor];
            batch.classes_added.push_back(id);
            for (std::size_t r : split.train[id])
                batch.samples.push_back(make_sample(fs, r));
        }
        std::shuffle(batch.samples.begin(), batch.samples.end(), rng);
        plan.iterations.push_back(std::move(batch));
    };

    emit_iteration(cfg.initial_classes);
    while (cursor < order.size())
        emit_iteration(cfg.batch_classes);
    return plan;
}

std::vector<StreamEvent> generate_scenario3(const ScenarioConfig& cfg, const FeatureSet& fs) {
    if (cfg.segments < 1 || cfg.images_per_class_per_segment < 1 ||
        cfg.class_lifetime_segments < 1)
        throw ConfigError("scenario 3: counts must be positive");

    std::vector<ClassId> ids = fs.class_ids();
    const int total_classes = static_cast<int>(ids.size());
    const int intro_window = std::max(1, cfg.segments / 2);
    const int known_needed = cfg.known_per_segment * intro_window;
    const int unknown_needed = cfg.unknown_per_segment * intro_window;

    // Known pool = lowest class ids, in ascending order; the rest can only
    // ever be metered as unknown.
    std::vector<ClassId> known_pool, unknown_pool;
    for (ClassId id : ids) {
        if (static_cast<int>(known_pool.size()) < cfg.known_classes)
            known_pool.push_back(id);
        else
            unknown_pool.push_back(id);
    }
    if (known_pool.empty() || unknown_pool.empty())
        throw ConfigError("scenario 3: needs >= " + std::to_string(known_needed + unknown_needed) +
                          " classes (" + std::to_string(known_needed) + " known + " +
                          std::to_string(unknown_needed) + " unknown), dataset has " +
                          std::to_string(total_classes));

    std::mt19937_64 rng(cfg.seed);

    struct ActiveClass {
        ClassId id;
        bool trainable;
        int intro_segment;
        std::vector<std::size_t> rows; // seeded order, consumed front to back
        std::size_t cursor = 0;
    };
    std::vector<ActiveClass> classes;
    std::size_t next_known = 0, next_unknown = 0;
    for (int s = 1; s <= intro_window; ++s) {
        for (int k = 0; k < cfg.known_per_segment && next_known < known_pool.size(); ++k)
            classes.push_back({known_pool[next_known++], true, s, {}, 0});
        for (int k = 0; k < cfg.unknown_per_segment && next_unknown < unknown_pool.size(); ++k)
            classes.push_back({unknown_pool[next_unknown++], false, s, {}, 0});
    }
    for (ActiveClass& ac : classes) {
        ac.rows = fs.class_index.at(ac.id);
        std::shuffle(ac.rows.begin(), ac.rows.end(), rng);
    }

    // Pre-flight the per-class demand so shortfalls fail with a list instead
    // of mid-stream.
    std::ostringstream shortfall;
    for (const ActiveClass& ac : classes) {
        std::size_t demand = 0;
        const int last = std::min(cfg.segments, ac.intro_segment + cfg.class_lifetime_segments - 1);
        for (int s = ac.intro_segment; s <= last; ++s) {
            const double q = cfg.images_per_class_per_segment *
                             volume_multiplier(cfg.volume_profile, s, cfg.segments);
            demand += static_cast<std::size_t>(std::max<long long>(1, std::llround(q)));
        }
        if (demand > ac.rows.size())
            shortfall << " class " << ac.id << " needs " << demand << " images, has "
                      << ac.rows.size() << ";";
    }
    if (!shortfall.str().empty())
        throw ConfigError("scenario 3: insufficient images per class:" + shortfall.str());

    std::vector<StreamEvent> stream;
    for (int s = 1; s <= cfg.segments; ++s) {
        const double mult = volume_multiplier(cfg.volume_profile, s, cfg.segments);
        const int quota = static_cast<int>(
            std::max<long long>(1, std::llround(cfg.images_per_class_per_segment * mult)));
        std::vector<StreamEvent> segment_events;
        for (ActiveClass& ac : classes) {
            if (s < ac.intro_segment || s >= ac.intro_segment + cfg.class_lifetime_segments)
                continue;
            for (int q = 0; q < quota; ++q) {
                StreamEvent ev;
                ev.x = fs.row_double(ac.rows[ac.cursor++]);
                ev.y = ac.id;
                ev.trainable = ac.trainable;
                ev.segment = s;
                segment_events.push_back(std::move(ev));
            }
        }
        std::shuffle(segment_events.begin(), segment_events.end(), rng);
        for (StreamEvent& ev : segment_events)
            stream.push_back(std::move(ev));
    }

    // The known flag is a pure schedule function: true once an earlier
    // trainable event carried the same class.
    std::set<ClassId> taught;
    for (StreamEvent& ev : stream) {
        ev.known = taught.count(ev.y) != 0;
        if (ev.trainable) taught.insert(ev.y);
    }
    return stream;
}

// ---------------------------------------------------------------------------

OpenPrediction NcmLearner::predict_open(const FeatureVector& x) const {
    if (clf_.num_classes() == 0) return {kUnknownLabel, 0.0};
    auto post = clf_.class_posteriors(x);
    ClassId best = clf_.predict(x);
    return {best, post[best]};
}

OpenPrediction OnnoLearner::predict_open(const FeatureVector& x) const {
    if (clf_.ncm().num_classes() == 0) return {kUnknownLabel, 0.0};
    return clf_.predict_open(x);
}

void OnnoLearner::on_segment_end(int segment) {
    if (freeze_after_ > 0 && segment >= freeze_after_ && !clf_.frozen()) {
        log::info("onno: freezing metric and threshold after segment " +
                  std::to_string(segment));
        clf_.set_frozen(true);
    }
}

OpenPrediction NbcLearner::predict_open(const FeatureVector& x) const {
    if (clf_.balls().empty()) return {kUnknownLabel, 0.0};
    return clf_.predict_open(x);
}

void NbcLearner::on_segment_end(int segment) {
    if (freeze_after_ > 0 && segment >= freeze_after_ && !clf_.frozen()) {
        log::info("onbc: freezing metric and threshold after segment " +
                  std::to_string(segment));
        clf_.set_frozen(true);
    }
}

ProtocolResult run_protocol(OnlineLearner& learner, const std::vector<StreamEvent>& stream) {
    ProtocolResult result;
    OnlineAccuracy closed, open;

    int current_segment = stream.empty() ? 0 : stream.front().segment;
    std::int64_t seg_samples = 0, seg_closed_n = 0, seg_open_n = 0;
    std::int64_t seg_closed_hits = 0, seg_open_hits = 0;
    double seg_cc = 0.0, seg_oc = 0.0, seg_thr = 0.0;

    auto flush_segment = [&]() {
        SegmentReport r;
        r.segment = current_segment;
        r.samples = seg_samples;
        r.closed_acc = closed.value();
        r.open_acc = open.value();
        r.harmonic = harmonic_mean(closed.value(), open.value());
        r.seg_closed_acc = seg_closed_n > 0
                               ? static_cast<double>(seg_closed_hits) / seg_closed_n
                               : 0.0;
        r.seg_open_acc = seg_open_n > 0 ? static_cast<double>(seg_open_hits) / seg_open_n : 0.0;
        r.mean_closed_confidence =
            seg_closed_n > 0 ? seg_cc / static_cast<double>(seg_closed_n)
                             : std::numeric_limits<double>::quiet_NaN();
        r.mean_open_confidence = seg_open_n > 0
                                     ? seg_oc / static_cast<double>(seg_open_n)
                                     : std::numeric_limits<double>::quiet_NaN();
        r.mean_threshold = seg_samples > 0 ? seg_thr / static_cast<double>(seg_samples)
                                           : std::numeric_limits<double>::quiet_NaN();
        result.segments.push_back(r);
        learner.on_segment_end(current_segment);
        seg_samples = seg_closed_n = seg_open_n = seg_closed_hits = seg_open_hits = 0;
        seg_cc = seg_oc = seg_thr = 0.0;
    };

    for (const StreamEvent& ev : stream) {
        if (ev.segment != current_segment) {
            flush_segment();
            current_segment = ev.segment;
        }

        EventRecord rec;
        rec.segment = ev.segment;
        rec.truth = ev.y;
        rec.known = ev.known;

        OpenPrediction pred{kUnknownLabel, 0.0};
        double threshold = 0.0;
        try {
            pred = learner.predict_open(ev.x);
            threshold = learner.current_threshold();
        } catch (const Error& e) {
            log::warn(std::string("protocol: prediction failed: ") + e.what());
        }
        rec.predicted = pred.label;
        rec.confidence = pred.confidence;
        rec.threshold = threshold;

        seg_samples += 1;
        seg_thr += threshold;
        if (ev.known) {
            const bool hit = pred.label == ev.y;
            closed.record(hit);
            seg_closed_n += 1;
            seg_closed_hits += hit ? 1 : 0;
            seg_cc += pred.confidence;
        } else {
            const bool hit = pred.label == kUnknownLabel;
            open.record(hit);
            seg_open_n += 1;
            seg_open_hits += hit ? 1 : 0;
            seg_oc += pred.confidence;
        }

        if (ev.trainable) {
            try {
                rec.trained = learner.learn(ev.x, ev.y);
            } catch (const Error& e) {
                log::warn(std::string("protocol: update failed, sample skipped: ") + e.what());
            }
        }
        result.events.push_back(std::move(rec));
    }
    if (!stream.empty()) flush_segment();

    result.final_score = {closed.value(), open.value(),
                          harmonic_mean(closed.value(), open.value())};
    return result;
}

} // namespace owr
