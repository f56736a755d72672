#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "owr/stream.hpp"

namespace owr {

/// Everything that determines a run. Two runs from the same manifest produce
/// byte-identical report files (within one platform build).
struct RunManifest {
    ScenarioConfig config;
    std::string learner = "onbc"; // oncm | onno | onbc
    std::string data_path;        // feature file, or
    std::string synth;            // synthetic preset name
    std::string out_dir = "owr-out";
    double gamma = 0.01;
    std::size_t rank_m = 0;        // 0: min(d, 256)
    int freeze_after_segment = 0;  // 0: keep adapting; N: fixed-metric variant
    bool whiten = true;            // S1/S2 only; stats frozen on the initial classes
};

/// Scenario defaults adapted to a synthetic preset (desk-scale schedules so
/// e.g. `--scenario s3 --synth halo` runs out of the box).
ScenarioConfig preset_scenario_config(const std::string& preset, Scenario scenario);

/// Flat key-value config file (key = value, '#' comments). Values already on
/// the manifest are overwritten; CLI flags are applied afterwards and win.
void apply_config_file(RunManifest& manifest, const std::string& path);

std::unique_ptr<OnlineLearner> make_learner(const RunManifest& manifest, std::size_t dim);

/// Loads the dataset (synth preset or feature file) named by the manifest.
FeatureSet load_manifest_dataset(const RunManifest& manifest);

/// Full run: dataset -> scenario -> learner -> report files in out_dir
/// (manifest.json, segments.jsonl, segments.tsv, summary.json, plus grid.tsv
/// for scenario 2). Returns a process exit code.
int cmd_run(const RunManifest& manifest);

/// Consistency checks without running; lists violations on stderr.
int cmd_validate(const RunManifest& manifest);

} // namespace owr
