#include "owr/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "owr/errors.hpp"
#include "owr/log.hpp"
#include "owr/metric.hpp"

namespace owr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

ScenarioConfig preset_scenario_config(const std::string& preset, Scenario scenario) {
    ScenarioConfig cfg = default_config(scenario);
    if (preset == "separable3") {
        cfg.initial_classes = 1;
        cfg.batch_classes = 1;
        cfg.eval_points = {2, 3};
        cfg.segments = 8;
        cfg.known_per_segment = 1;
        cfg.unknown_per_segment = 1;
        cfg.images_per_class_per_segment = 30;
        cfg.class_lifetime_segments = 8;
        cfg.known_classes = 2;
        cfg.volume_profile = VolumeProfile::Flat;
    } else if (preset == "xor4") {
        cfg.initial_classes = 1;
        cfg.batch_classes = 1;
        cfg.eval_points = {2};
        cfg.segments = 8;
        cfg.known_per_segment = 1;
        cfg.unknown_per_segment = 1;
        cfg.images_per_class_per_segment = 60;
        cfg.class_lifetime_segments = 8;
        cfg.known_classes = 1;
        cfg.volume_profile = VolumeProfile::Flat;
    } else if (preset == "halo") {
        cfg.initial_classes = 2;
        cfg.batch_classes = 1;
        cfg.eval_points = {3};
        cfg.segments = 8;
        cfg.known_per_segment = 1;
        cfg.unknown_per_segment = 1;
        cfg.images_per_class_per_segment = 60;
        cfg.class_lifetime_segments = 8;
        cfg.known_classes = 2;
        cfg.volume_profile = VolumeProfile::Flat;
    }
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("bad boolean value '" + s + "'");
}

} // namespace

void apply_config_file(RunManifest& m, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file '" + path + "' cannot be opened");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::string key, value;
        std::size_t eq = line.find('=');
        if (eq != std::string::npos) {
            key = trim(line.substr(0, eq));
            value = trim(line.substr(eq + 1));
        } else {
            std::size_t sp = line.find_first_of(" \t");
            if (sp == std::string::npos)
                throw ConfigError(path + ": line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
            key = trim(line.substr(0, sp));
            value = trim(line.substr(sp + 1));
        }
        try {
            if (key == "scenario") m.config.scenario = scenario_from_string(value);
            else if (key == "seed") m.config.seed = std::stoull(value);
            else if (key == "initial_classes") m.config.initial_classes = std::stoi(value);
            else if (key == "batch_classes") m.config.batch_classes = std::stoi(value);
            else if (key == "eval_points") m.config.eval_points = parse_int_list(value);
            else if (key == "segments") m.config.segments = std::stoi(value);
            else if (key == "known_per_segment") m.config.known_per_segment = std::stoi(value);
            else if (key == "unknown_per_segment") m.config.unknown_per_segment = std::stoi(value);
            else if (key == "images_per_class_per_segment")
                m.config.images_per_class_per_segment = std::stoi(value);
            else if (key == "class_lifetime_segments")
                m.config.class_lifetime_segments = std::stoi(value);
            else if (key == "volume_profile") {
                if (value == "flat") m.config.volume_profile = VolumeProfile::Flat;
                else if (value == "peaked") m.config.volume_profile = VolumeProfile::Peaked;
                else throw ConfigError("volume_profile must be flat or peaked");
            } else if (key == "known_classes") m.config.known_classes = std::stoi(value);
            else if (key == "test_fraction") m.config.test_fraction = std::stod(value);
            else if (key == "learner") m.learner = value;
            else if (key == "data") m.data_path = value;
            else if (key == "synth") m.synth = value;
            else if (key == "out") m.out_dir = value;
            else if (key == "gamma") m.gamma = std::stod(value);
            else if (key == "rank_m") m.rank_m = std::stoul(value);
            else if (key == "freeze_after_segment") m.freeze_after_segment = std::stoi(value);
            else if (key == "whiten") m.whiten = parse_bool(value);
            else
                throw ConfigError("unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(path + ": line " + std::to_string(lineno) + ": bad value for '" +
                              key + "': " + e.what());
        }
    }
}

std::unique_ptr<OnlineLearner> make_learner(const RunManifest& m, std::size_t dim) {
    const std::size_t rank = m.rank_m == 0 ? default_rank(dim) : m.rank_m;
    if (m.learner == "oncm")
        return std::make_unique<NcmLearner>(dim, rank, m.gamma);
    if (m.learner == "onno")
        return std::make_unique<OnnoLearner>(dim, rank, m.gamma, m.freeze_after_segment);
    if (m.learner == "onbc")
        return std::make_unique<NbcLearner>(dim, rank, m.gamma, m.freeze_after_segment);
    throw ConfigError("unknown learner '" + m.learner + "' (expected oncm, onno or onbc)");
}

FeatureSet load_manifest_dataset(const RunManifest& m) {
    if (!m.synth.empty()) {
        if (!is_synth_preset(m.synth))
            throw ConfigError("unknown synth preset '" + m.synth + "'");
        return synth_preset(m.synth, m.config.seed);
    }
    if (m.data_path.empty())
        throw ConfigError("no dataset: pass a feature file or a synth preset");
    if (!fs::exists(m.data_path))
        throw ParseError("dataset path '" + m.data_path + "' does not exist");
    return load_features(m.data_path);
}

namespace {

ordered_json manifest_json(const RunManifest& m) {
    ordered_json j;
    j["scenario"] = to_string(m.config.scenario);
    j["seed"] = m.config.seed;
    j["learner"] = m.learner;
    j["data"] = m.data_path;
    j["synth"] = m.synth;
    j["out"] = m.out_dir;
    j["gamma"] = m.gamma;
    j["rank_m"] = m.rank_m;
    j["freeze_after_segment"] = m.freeze_after_segment;
    j["whiten"] = m.whiten;
    j["initial_classes"] = m.config.initial_classes;
    j["batch_classes"] = m.config.batch_classes;
    j["eval_points"] = m.config.eval_points;
    j["segments"] = m.config.segments;
    j["known_per_segment"] = m.config.known_per_segment;
    j["unknown_per_segment"] = m.config.unknown_per_segment;
    j["images_per_class_per_segment"] = m.config.images_per_class_per_segment;
    j["class_lifetime_segments"] = m.config.class_lifetime_segments;
    j["volume_profile"] = m.config.volume_profile == VolumeProfile::Flat ? "flat" : "peaked";
    j["known_classes"] = m.config.known_classes;
    j["test_fraction"] = m.config.test_fraction;
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

struct EvalStats {
    OnlineAccuracy closed, open, combined;
    double conf_sum = 0.0;
    std::int64_t n = 0;
};

void eval_sample(OnlineLearner& learner, const LabeledSample& s, bool known, EvalStats& st) {
    OpenPrediction p = learner.predict_open(s.x);
    if (known) {
        st.closed.record(p.label == s.y);
        st.combined.record(p.label == s.y);
    } else {
        st.open.record(p.label == kUnknownLabel);
        st.combined.record(p.label == kUnknownLabel);
    }
    st.conf_sum += p.confidence;
    st.n += 1;
}

int run_scenario1(const RunManifest& m, const FeatureSet& data, OnlineLearner& learner,
                  std::vector<SegmentReport>& reports) {
    Scenario1Plan plan = generate_scenario1(m.config, data);
    std::set<ClassId> known;
    std::size_t next_eval = 0;
    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
        for (const LabeledSample& s : plan.batches[b].samples)
            learner.learn(s.x, s.y);
        for (ClassId id : plan.batches[b].classes_added)
            known.insert(id);
        while (next_eval < plan.eval_after_batch.size() &&
               plan.eval_after_batch[next_eval].first == b) {
            EvalStats st;
            for (const auto& [id, rows] : plan.test_by_class) {
                if (known.count(id) == 0) continue;
                for (std::size_t r : rows)
                    eval_sample(learner, plan.test[r], /*known=*/true, st);
            }
            SegmentReport rep;
            rep.segment = plan.eval_after_batch[next_eval].second; // class count milestone
            rep.samples = st.n;
            rep.closed_acc = st.closed.value();
            rep.open_acc = 0.0;
            rep.harmonic = harmonic_mean(rep.closed_acc, rep.open_acc);
            rep.seg_closed_acc = st.closed.value();
            rep.seg_open_acc = 0.0;
            rep.mean_closed_confidence = st.n > 0 ? st.conf_sum / st.n : 0.0;
            rep.mean_open_confidence = 0.0;
            rep.mean_threshold = learner.current_threshold();
            reports.push_back(rep);
            std::cout << "eval@" << rep.segment << " classes: top-1 " << rep.closed_acc
                      << " over " << rep.samples << " test samples\n";
            ++next_eval;
        }
    }
    return 0;
}

int run_scenario2(const RunManifest& m, const FeatureSet& data, OnlineLearner& learner,
                  std::vector<SegmentReport>& reports, std::string& grid_tsv) {
    Scenario2Plan plan = generate_scenario2(m.config, data);
    std::ostringstream grid;
    grid << "iteration\tknown\tunknown\tclosed\topen\tharmonic\tcombined\n";
    std::vector<ClassId> known_order; // classes added so far, in entry order
    std::size_t cursor = 0;
    for (std::size_t it = 0; it < plan.iterations.size(); ++it) {
        const TrainBatch& batch = plan.iterations[it];
        for (const LabeledSample& s : batch.samples)
            learner.learn(s.x, s.y);
        for (ClassId id : batch.classes_added)
            known_order.push_back(id);
        cursor += batch.classes_added.size();

        std::vector<ClassId> unknown_pool(plan.class_order.begin() + cursor,
                                          plan.class_order.end());
        std::set<ClassId> known_set(known_order.begin(), known_order.end());

        // Grid over the number of unknown test classes, Fig.-3 style.
        std::vector<int> unknown_sizes;
        for (int u = 0; u <= static_cast<int>(unknown_pool.size()); u += m.config.batch_classes)
            unknown_sizes.push_back(u);
        if (unknown_sizes.empty() ||
            unknown_sizes.back() != static_cast<int>(unknown_pool.size()))
            unknown_sizes.push_back(static_cast<int>(unknown_pool.size()));

        EvalStats full;
        for (int u : unknown_sizes) {
            EvalStats st;
            for (ClassId id : known_order)
                for (std::size_t r : plan.test_by_class.at(id))
                    eval_sample(learner, plan.test[r], /*known=*/true, st);
            for (int k = 0; k < u; ++k)
                for (std::size_t r : plan.test_by_class.at(unknown_pool[k]))
                    eval_sample(learner, plan.test[r], /*known=*/false, st);
            grid << it << '\t' << known_order.size() << '\t' << u << '\t'
                 << st.closed.value() << '\t' << st.open.value() << '\t'
                 << harmonic_mean(st.closed.value(), st.open.value()) << '\t'
                 << st.combined.value() << '\n';
            if (u == static_cast<int>(unknown_pool.size())) full = st;
        }

        SegmentReport rep;
        rep.segment = static_cast<int>(it);
        rep.samples = full.n;
        rep.closed_acc = full.closed.value();
        rep.open_acc = full.open.value();
        rep.harmonic = harmonic_mean(rep.closed_acc, rep.open_acc);
        rep.seg_closed_acc = rep.closed_acc;
        rep.seg_open_acc = rep.open_acc;
        rep.mean_closed_confidence = full.n > 0 ? full.conf_sum / full.n : 0.0;
        rep.mean_open_confidence = 0.0;
        rep.mean_threshold = learner.current_threshold();
        reports.push_back(rep);
        std::cout << "iteration " << it << ": known " << known_order.size() << ", closed "
                  << rep.closed_acc << ", open " << rep.open_acc << ", harmonic "
                  << rep.harmonic << "\n";
    }
    grid_tsv = grid.str();
    return 0;
}

} // namespace

int cmd_run(const RunManifest& m) {
    try {
        FeatureSet data = load_manifest_dataset(m);
        if (m.learner == "oncm" && (m.config.scenario == Scenario::OpenWorldS2 ||
                                    m.config.scenario == Scenario::StreamS3))
            log::warn("oncm cannot predict unknown classes; "
                      "open-set accuracy will be ~0 on unknown-heavy streams");

        // Whitening stats come from the initial class set only, then stay
        // frozen for the rest of the run.
        if (m.whiten && (m.config.scenario == Scenario::IncrementalS1 ||
                         m.config.scenario == Scenario::OpenWorldS2)) {
            std::vector<ClassId> order = shuffled_class_ids(data, m.config.seed);
            const std::size_t k =
                std::min<std::size_t>(order.size(), static_cast<std::size_t>(m.config.initial_classes));
            std::vector<ClassId> initial(order.begin(), order.begin() + k);
            data = whiten(data, compute_whiten_stats(data, initial));
        }

        auto learner = make_learner(m, data.d);
        std::vector<SegmentReport> reports;
        std::string grid_tsv;
        ProtocolResult protocol;

        switch (m.config.scenario) {
            case Scenario::IncrementalS1:
                run_scenario1(m, data, *learner, reports);
                break;
            case Scenario::OpenWorldS2:
                run_scenario2(m, data, *learner, reports, grid_tsv);
                break;
            case Scenario::StreamS3:
            case Scenario::Custom: {
                std::vector<StreamEvent> stream = generate_scenario3(m.config, data);
                protocol = run_protocol(*learner, stream);
                reports = protocol.segments;
                std::cout << "final: closed " << protocol.final_score.closed_acc << ", open "
                          << protocol.final_score.open_acc << ", harmonic "
                          << protocol.final_score.harmonic << " over "
                          << protocol.events.size() << " events\n";
                break;
            }
        }

        fs::create_directories(m.out_dir);
        write_file(fs::path(m.out_dir) / "manifest.json", manifest_json(m).dump(2) + "\n");

        std::string jsonl, tsv = segment_report_tsv_header() + "\n";
        for (const SegmentReport& r : reports) {
            jsonl += segment_report_jsonl(r) + "\n";
            tsv += segment_report_tsv(r) + "\n";
        }
        write_file(fs::path(m.out_dir) / "segments.jsonl", jsonl);
        write_file(fs::path(m.out_dir) / "segments.tsv", tsv);
        if (!grid_tsv.empty())
            write_file(fs::path(m.out_dir) / "grid.tsv", grid_tsv);

        ordered_json summary;
        summary["learner"] = m.learner;
        summary["scenario"] = to_string(m.config.scenario);
        summary["segments"] = reports.size();
        if (!reports.empty()) {
            const SegmentReport& last = reports.back();
            summary["closed_acc"] = last.closed_acc;
            summary["open_acc"] = last.open_acc;
            summary["harmonic"] = last.harmonic;
        }
        write_file(fs::path(m.out_dir) / "summary.json", summary.dump(2) + "\n");
        std::cout << "reports written to " << m.out_dir << "\n";
        return 0;
    } catch (const ParseError& e) {
        log::error(e.what());
        return 2;
    } catch (const Error& e) {
        log::error(e.what());
        return 1;
    }
}

int cmd_validate(const RunManifest& m) {
    std::vector<std::string> problems;
    bool missing_file = false;

    if (m.synth.empty() && !m.data_path.empty() && !fs::exists(m.data_path)) {
        problems.push_back("dataset path '" + m.data_path + "' does not exist");
        missing_file = true;
    }
    if (m.synth.empty() && m.data_path.empty())
        problems.push_back("no dataset: pass a feature file or a synth preset");
    if (!m.synth.empty() && !is_synth_preset(m.synth))
        problems.push_back("unknown synth preset '" + m.synth + "'");
    if (m.learner != "oncm" && m.learner != "onno" && m.learner != "onbc")
        problems.push_back("unknown learner '" + m.learner + "'");
    if (m.gamma < 0.0 || m.gamma >= 1.0)
        problems.push_back("gamma must be in [0, 1)");

    // eval_points must be ascending and land exactly on a batch boundary
    if (m.config.scenario == Scenario::IncrementalS1) {
        const auto& pts = m.config.eval_points;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i > 0 && pts[i] <= pts[i - 1]) {
                problems.push_back("contradictory eval_points: not strictly ascending");
                break;
            }
            if (pts[i] < m.config.initial_classes) {
                problems.push_back("contradictory eval_points: " + std::to_string(pts[i]) +
                                   " is below the initial " +
                                   std::to_string(m.config.initial_classes) + " classes");
                break;
            }
            if ((pts[i] - m.config.initial_classes) % m.config.batch_classes != 0) {
                problems.push_back("contradictory eval_points: " + std::to_string(pts[i]) +
                                   " is not initial + k*batch");
                break;
            }
        }
    }

    if (problems.empty() || !missing_file) {
        try {
            FeatureSet data = load_manifest_dataset(m);
            if (m.rank_m > data.d)
                problems.push_back("rank_m " + std::to_string(m.rank_m) + " exceeds feature dim " +
                                   std::to_string(data.d));
            switch (m.config.scenario) {
                case Scenario::IncrementalS1:
                    generate_scenario1(m.config, data);
                    break;
                case Scenario::OpenWorldS2:
                    generate_scenario2(m.config, data);
                    break;
                case Scenario::StreamS3:
                case Scenario::Custom:
                    generate_scenario3(m.config, data);
                    break;
            }
        } catch (const ParseError& e) {
            problems.push_back(e.what());
            missing_file = true;
        } catch (const Error& e) {
            problems.push_back(e.what());
        }
    }

    if (problems.empty()) {
        std::cout << "manifest ok\n";
        return 0;
    }
    for (const std::string& p : problems)
        std::cerr << "invalid: " << p << "\n";
    return missing_file ? 2 : 1;
}

} // namespace owr
