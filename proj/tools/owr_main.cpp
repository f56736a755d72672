#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "owr/errors.hpp"
#include "owr/log.hpp"
#include "owr/runner.hpp"

namespace {

// Defaults come from the scenario (or from the synth preset's desk-scale
// schedule); the config file overrides those, and explicit flags win last.
owr::RunManifest build_manifest(const std::string& scenario, const std::string& config_path,
                                const CLI::App& cmd, const std::string& learner,
                                const std::string& data, const std::string& synth,
                                std::uint64_t seed, double gamma, std::size_t rank_m,
                                const std::string& out, int freeze_after, bool no_whiten) {
    owr::RunManifest m;
    owr::Scenario sc = owr::scenario_from_string(scenario);
    m.config = synth.empty() ? owr::default_config(sc) : owr::preset_scenario_config(synth, sc);
    m.config.scenario = sc;
    m.synth = synth;
    if (!config_path.empty()) owr::apply_config_file(m, config_path);

    if (cmd.count("--learner")) m.learner = learner;
    if (cmd.count("--data")) m.data_path = data;
    if (cmd.count("--synth")) m.synth = synth;
    if (cmd.count("--seed")) m.config.seed = seed;
    if (cmd.count("--gamma")) m.gamma = gamma;
    if (cmd.count("--rank-m")) m.rank_m = rank_m;
    if (cmd.count("--out")) m.out_dir = out;
    if (cmd.count("--freeze-after-segment")) m.freeze_after_segment = freeze_after;
    if (cmd.count("--no-whiten")) m.whiten = !no_whiten;
    return m;
}

void add_common_flags(CLI::App* cmd, std::string& scenario, std::string& learner,
                      std::string& data, std::string& synth, std::uint64_t& seed,
                      double& gamma, std::size_t& rank_m, std::string& out,
                      std::string& config_path, int& freeze_after, bool& no_whiten) {
    cmd->add_option("--scenario", scenario, "Evaluation scenario: s1, s2, s3 or custom");
    cmd->add_option("--learner", learner, "Learner: oncm, onno or onbc");
    cmd->add_option("--data", data, "Feature file (OWFS binary or label,f1,...,fd text)");
    cmd->add_option("--synth", synth, "Synthetic preset: separable3, xor4 or halo");
    cmd->add_option("--seed", seed, "Random seed (fully determines the run)");
    cmd->add_option("--gamma", gamma, "Metric learning rate");
    cmd->add_option("--rank-m", rank_m, "Projected dimension m (default min(d, 256))");
    cmd->add_option("--out", out, "Output directory for report files");
    cmd->add_option("--config", config_path, "Flat key-value config file");
    cmd->add_option("--freeze-after-segment", freeze_after,
                    "Freeze metric and threshold after this segment (fixed-metric variant)");
    cmd->add_flag("--no-whiten", no_whiten, "Skip feature whitening (s1/s2)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming open-world classification engine (oNCM / oNNO / oNBC)"};
    app.require_subcommand(1);

    std::string scenario = "s3", learner = "onbc", data, synth, out = "owr-out", config_path;
    std::uint64_t seed = 0;
    double gamma = 0.01;
    std::size_t rank_m = 0;
    int freeze_after = 0;
    bool no_whiten = false;

    CLI::App* run = app.add_subcommand("run", "Run a scenario and write report files");
    add_common_flags(run, scenario, learner, data, synth, seed, gamma, rank_m, out,
                     config_path, freeze_after, no_whiten);
    CLI::App* validate =
        app.add_subcommand("validate", "Check config consistency and dataset sufficiency");
    add_common_flags(validate, scenario, learner, data, synth, seed, gamma, rank_m, out,
                     config_path, freeze_after, no_whiten);

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* cmd = run->parsed() ? run : validate;
        owr::RunManifest manifest =
            build_manifest(scenario, config_path, *cmd, learner, data, synth, seed, gamma,
                           rank_m, out, freeze_after, no_whiten);
        return run->parsed() ? owr::cmd_run(manifest) : owr::cmd_validate(manifest);
    } catch (const owr::ParseError& e) {
        owr::log::error(e.what());
        return 2;
    } catch (const owr::Error& e) {
        owr::log::error(e.what());
        return 1;
    }
}
