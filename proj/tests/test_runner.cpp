#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "owr/errors.hpp"
#include "owr/runner.hpp"

using namespace owr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunManifest halo_manifest(std::uint64_t seed) {
    RunManifest m;
    m.config = preset_scenario_config("halo", Scenario::StreamS3);
    m.config.seed = seed;
    m.synth = "halo";
    m.learner = "onbc";
    m.rank_m = 2;
    return m;
}

} // namespace

TEST_CASE("config file parsing") {
    const fs::path path = fs::temp_directory_path() / "owr_test_config.cfg";
    std::ofstream(path) << "# scenario setup\n"
                        << "scenario = s3\n"
                        << "seed = 99\n"
                        << "segments = 6\n"
                        << "known_per_segment = 2\n"
                        << "volume_profile = flat\n"
                        << "eval_points = 4, 8\n"
                        << "learner = onno\n"
                        << "gamma = 0.25\n"
                        << "whiten = off\n";
    RunManifest m;
    apply_config_file(m, path.string());
    CHECK(m.config.scenario == Scenario::StreamS3);
    CHECK(m.config.seed == 99);
    CHECK(m.config.segments == 6);
    CHECK(m.config.known_per_segment == 2);
    CHECK(m.config.volume_profile == VolumeProfile::Flat);
    CHECK(m.config.eval_points == std::vector<int>{4, 8});
    CHECK(m.learner == "onno");
    CHECK(m.gamma == 0.25);
    CHECK(m.whiten == false);

    std::ofstream(path) << "no_such_key = 3\n";
    CHECK_THROWS_AS(apply_config_file(m, path.string()), ConfigError);
    std::ofstream(path) << "gamma = zap\n";
    CHECK_THROWS_AS(apply_config_file(m, path.string()), ConfigError);
    CHECK_THROWS_AS(apply_config_file(m, "/nonexistent.cfg"), ConfigError);
    fs::remove(path);
}

TEST_CASE("make_learner and dataset loading") {
    RunManifest m = halo_manifest(1);
    CHECK(make_learner(m, 6)->name() == "onbc");
    m.learner = "oncm";
    CHECK(make_learner(m, 6)->name() == "oncm");
    m.learner = "onno";
    m.freeze_after_segment = 1;
    CHECK(make_learner(m, 6)->name() == "onno-fixed");
    m.learner = "zap";
    CHECK_THROWS_AS(make_learner(m, 6), ConfigError);

    m = halo_manifest(1);
    FeatureSet data = load_manifest_dataset(m);
    CHECK(data.d == 6);

    m.synth.clear();
    m.data_path = "/nonexistent/features.owfs";
    CHECK_THROWS_AS(load_manifest_dataset(m), ParseError);
    m.data_path.clear();
    CHECK_THROWS_AS(load_manifest_dataset(m), ConfigError);
}

TEST_CASE("cmd_validate exit codes and messages") {
    SUBCASE("sufficient synth preset passes") {
        CHECK(cmd_validate(halo_manifest(7)) == 0);
    }
    SUBCASE("missing dataset path exits 2") {
        RunManifest m;
        m.data_path = "/nonexistent/features.owfs";
        CHECK(cmd_validate(m) == 2);
    }
    SUBCASE("paper-scale scenario 3 on a small dataset fails") {
        RunManifest m = halo_manifest(7);
        m.config = default_config(Scenario::StreamS3); // needs 200 classes
        m.config.seed = 7;
        CHECK(cmd_validate(m) == 1);
    }
    SUBCASE("contradictory eval points fail") {
        RunManifest m = halo_manifest(7);
        m.config.scenario = Scenario::IncrementalS1;
        m.config.initial_classes = 2;
        m.config.batch_classes = 1;
        m.config.eval_points = {3, 3};
        CHECK(cmd_validate(m) == 1);
    }
    SUBCASE("bad gamma fails") {
        RunManifest m = halo_manifest(7);
        m.gamma = 1.5;
        CHECK(cmd_validate(m) == 1);
    }
}

TEST_CASE("cmd_run writes the report files") {
    const fs::path out = fs::temp_directory_path() / "owr_test_run_out";
    fs::remove_all(out);
    RunManifest m = halo_manifest(7);
    m.out_dir = out.string();
    REQUIRE(cmd_run(m) == 0);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "segments.jsonl"));
    CHECK(fs::exists(out / "segments.tsv"));
    CHECK(fs::exists(out / "summary.json"));

    const std::string tsv = slurp(out / "segments.tsv");
    CHECK(tsv.rfind("segment\tclosed\topen\tharmonic\tcc\toc\tthr\n", 0) == 0);
    // 8 segments + header
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 9);

    const std::string jsonl = slurp(out / "segments.jsonl");
    CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 8);
    CHECK(jsonl.find("\"seg_closed_acc\"") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("same manifest reproduces byte-identical reports") {
    const fs::path out = fs::temp_directory_path() / "owr_test_deterministic";
    fs::remove_all(out);
    RunManifest m = halo_manifest(3);
    m.out_dir = out.string();
    REQUIRE(cmd_run(m) == 0);
    const std::string first_jsonl = slurp(out / "segments.jsonl");
    const std::string first_summary = slurp(out / "summary.json");
    REQUIRE(cmd_run(m) == 0);
    CHECK(slurp(out / "segments.jsonl") == first_jsonl);
    CHECK(slurp(out / "summary.json") == first_summary);
    fs::remove_all(out);
}

TEST_CASE("scenario 1 and 2 runs on a synth preset") {
    const fs::path out = fs::temp_directory_path() / "owr_test_s1s2";
    fs::remove_all(out);

    RunManifest m;
    m.synth = "separable3";
    m.config = preset_scenario_config("separable3", Scenario::IncrementalS1);
    m.config.scenario = Scenario::IncrementalS1;
    m.config.seed = 4;
    m.learner = "oncm";
    m.out_dir = (out / "s1").string();
    CHECK(cmd_run(m) == 0);
    CHECK(fs::exists(out / "s1" / "segments.tsv"));

    m.config = preset_scenario_config("separable3", Scenario::OpenWorldS2);
    m.config.scenario = Scenario::OpenWorldS2;
    m.config.seed = 4;
    m.learner = "onno";
    m.out_dir = (out / "s2").string();
    CHECK(cmd_run(m) == 0);
    CHECK(fs::exists(out / "s2" / "grid.tsv"));
    const std::string grid = slurp(out / "s2" / "grid.tsv");
    CHECK(grid.rfind("iteration\tknown\tunknown\tclosed\topen\tharmonic\tcombined\n", 0) == 0);

    // grid covers every (iteration, unknown-count) cell: 3 classes added one
    // at a time -> unknown pools 2, 1, 0 -> sizes {0,1,2}, {0,1}, {0}
    std::map<int, std::set<int>> cells;
    std::istringstream rows(grid);
    std::string line;
    std::getline(rows, line); // header
    while (std::getline(rows, line)) {
        std::istringstream fields(line);
        int iteration = 0, known = 0, unknown = 0;
        fields >> iteration >> known >> unknown;
        cells[iteration].insert(unknown);
    }
    REQUIRE(cells.size() == 3);
    CHECK(cells[0] == std::set<int>{0, 1, 2});
    CHECK(cells[1] == std::set<int>{0, 1});
    CHECK(cells[2] == std::set<int>{0});
    fs::remove_all(out);
}
