#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "owr/dataio.hpp"
#include "owr/errors.hpp"

using namespace owr;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / name;
}

FeatureSet tiny_set() {
    FeatureSet out;
    out.d = 2;
    out.features = {1.5f, -2.25f, 0.125f, 3.0f, -7.5f, 0.0f};
    out.labels = {4, 4, 9};
    out.n = 3;
    out.rebuild_index();
    return out;
}

} // namespace

TEST_CASE("owfs round-trip is bit exact") {
    FeatureSet fs1 = tiny_set();
    const fs::path path = temp_file("owr_test_roundtrip.owfs");
    save_features(fs1, path.string());
    FeatureSet fs2 = load_features(path.string());
    CHECK(fs2.n == fs1.n);
    CHECK(fs2.d == fs1.d);
    CHECK(fs2.labels == fs1.labels);
    CHECK(fs2.features == fs1.features); // float equality: bit-exact round trip
    fs::remove(path);
}

TEST_CASE("text fixture loading") {
    const fs::path path = temp_file("owr_test_fixture.csv");
    SUBCASE("well-formed 3x2 file") {
        std::ofstream(path) << "4,1.5,-2.25\n4,0.125,3\n9,-7.5,0\n";
        FeatureSet fs1 = load_features(path.string());
        CHECK(fs1.n == 3);
        CHECK(fs1.d == 2);
        CHECK(fs1.labels[2] == 9);
        CHECK(fs1.class_index.at(4).size() == 2);
    }
    SUBCASE("wrong arity names the line") {
        std::ofstream(path) << "4,1.5,-2.25\n4,0.125\n";
        try {
            load_features(path.string());
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("bad field names the line") {
        std::ofstream(path) << "4,1.5,zap\n";
        CHECK_THROWS_AS(load_features(path.string()), ParseError);
    }
    SUBCASE("non-finite rows are dropped") {
        std::ofstream(path) << "4,1.5,2.0\n4,inf,3\n9,1,1\n";
        FeatureSet fs1 = load_features(path.string());
        CHECK(fs1.n == 2);
    }
    fs::remove(path);
}

TEST_CASE("missing and corrupt files") {
    CHECK_THROWS_AS(load_features("/nonexistent/owr.owfs"), ParseError);
    const fs::path path = temp_file("owr_test_truncated.owfs");
    FeatureSet fs1 = tiny_set();
    save_features(fs1, path.string());
    // truncate the last record
    fs::resize_file(path, fs::file_size(path) - 5);
    CHECK_THROWS_AS(load_features(path.string()), ParseError);
    fs::remove(path);
}

TEST_CASE("whitening") {
    FeatureSet fs1;
    fs1.d = 2;
    fs1.features = {1.0f, 5.0f, 3.0f, 5.0f, 5.0f, 5.0f, 7.0f, 5.0f};
    fs1.labels = {0, 0, 1, 1};
    fs1.n = 4;
    fs1.rebuild_index();

    SUBCASE("stats from the set itself give mean 0, std 1") {
        WhitenStats stats = compute_whiten_stats(fs1, {});
        FeatureSet w = whiten(fs1, stats);
        double mean = 0.0;
        for (std::size_t i = 0; i < w.n; ++i)
            mean += w.features[i * 2];
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-6));
        double var = 0.0;
        for (std::size_t i = 0; i < w.n; ++i)
            var += w.features[i * 2] * w.features[i * 2];
        CHECK(var / w.n == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("constant dimension is floored, output zero") {
        WhitenStats stats = compute_whiten_stats(fs1, {});
        CHECK(stats.std[1] == 1e-8);
        FeatureSet w = whiten(fs1, stats);
        for (std::size_t i = 0; i < w.n; ++i)
            CHECK(w.features[i * 2 + 1] == 0.0f);
    }
    SUBCASE("manual two-point check") {
        WhitenStats stats;
        stats.mean = {1.0, 2.0};
        stats.std = {2.0, 4.0};
        FeatureSet w = whiten(fs1, stats);
        CHECK(w.features[0] == doctest::Approx((1.0 - 1.0) / 2.0));
        CHECK(w.features[1] == doctest::Approx((5.0 - 2.0) / 4.0));
    }
    SUBCASE("stats restricted to one class") {
        WhitenStats stats = compute_whiten_stats(fs1, {0});
        CHECK(stats.mean[0] == doctest::Approx(2.0));
    }
    SUBCASE("dimension mismatch is invalid") {
        WhitenStats stats;
        stats.mean = {0.0};
        stats.std = {1.0};
        CHECK_THROWS_AS(whiten(fs1, stats), InvalidInputError);
    }
}

TEST_CASE("synthetic gaussians") {
    SUBCASE("fixed seed reproduces the matrix") {
        FeatureSet a = synth_gaussians({{{0.0, 0.0}, {1.0, 1.0}, 1, 100}}, 42);
        FeatureSet b = synth_gaussians({{{0.0, 0.0}, {1.0, 1.0}, 1, 100}}, 42);
        CHECK(a.features == b.features);
        FeatureSet c = synth_gaussians({{{0.0, 0.0}, {1.0, 1.0}, 1, 100}}, 43);
        CHECK(a.features != c.features);
    }
    SUBCASE("zero variance collapses to the mean") {
        FeatureSet a = synth_gaussians({{{2.5, -1.0}, {0.0, 0.0}, 1, 10}}, 1);
        for (std::size_t i = 0; i < a.n; ++i) {
            CHECK(a.features[i * 2] == 2.5f);
            CHECK(a.features[i * 2 + 1] == -1.0f);
        }
    }
    SUBCASE("empirical mean within 3 sigma / sqrt(n) of the requested mean") {
        const std::size_t n = 4000;
        FeatureSet a = synth_gaussians({{{1.0, -2.0}, {4.0, 1.0}, 1, n}}, 11);
        for (std::size_t j = 0; j < 2; ++j) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                mean += a.features[i * 2 + j];
            mean /= static_cast<double>(n);
            const double sigma = std::sqrt(j == 0 ? 4.0 : 1.0);
            const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(n));
            CHECK(std::abs(mean - (j == 0 ? 1.0 : -2.0)) < bound);
        }
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(synth_gaussians({}, 1), InvalidInputError);
        CHECK_THROWS_AS(synth_gaussians({{{0.0}, {1.0}, 1, 0}}, 1), InvalidInputError);
        CHECK_THROWS_AS(synth_gaussians({{{0.0}, {-1.0}, 1, 5}}, 1), InvalidInputError);
    }
}

TEST_CASE("presets") {
    FeatureSet sep = synth_preset("separable3", 5);
    CHECK(sep.d == 10);
    CHECK(sep.num_classes() == 3);
    CHECK(sep.class_index.at(0).size() == 500);

    FeatureSet xor4 = synth_preset("xor4", 5);
    CHECK(xor4.d == 2);
    CHECK(xor4.num_classes() == 2);

    FeatureSet halo = synth_preset("halo", 5);
    CHECK(halo.d == 6);
    CHECK(halo.num_classes() == 3);
    CHECK(halo.class_index.count(kHaloRingClass) == 1);

    CHECK(is_synth_preset("halo"));
    CHECK_FALSE(is_synth_preset("nope"));
    CHECK_THROWS_AS(synth_preset("nope", 1), InvalidInputError);
}
