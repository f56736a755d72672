#include <doctest.h>

#include <cmath>
#include <random>

#include "owr/errors.hpp"
#include "owr/ncm.hpp"

#include "oracles.hpp"

using namespace owr;

namespace {

NcmClassifier two_class_1d() {
    NcmClassifier clf(1, 1, 0.0);
    clf.learn({0.0}, 1);
    clf.learn({2.0}, 2);
    return clf;
}

} // namespace

TEST_CASE("posteriors over one and two classes") {
    NcmClassifier clf(2, 2, 0.0);
    CHECK_THROWS_AS(clf.class_posteriors({0.0, 0.0}), EmptyModelError);

    clf.learn({1.0, 1.0}, 7);
    auto single = clf.class_posteriors({5.0, -3.0});
    CHECK(single.size() == 1);
    CHECK(single[7] == doctest::Approx(1.0));

    clf.learn({-1.0, 1.0}, 9);
    auto sym = clf.class_posteriors({0.0, 1.0}); // equidistant
    CHECK(sym[7] == doctest::Approx(0.5));
    CHECK(sym[9] == doctest::Approx(0.5));
}

TEST_CASE("posterior value against scalar arithmetic") {
    NcmClassifier clf = two_class_1d();
    auto post = clf.class_posteriors({0.0});
    // d1 = 0, d2 = 4: p(1) = 1 / (1 + exp(-2))
    const double expected = 1.0 / (1.0 + std::exp(-2.0));
    CHECK(post[1] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(post[1] == doctest::Approx(0.8808).epsilon(1e-4));
    CHECK(post[1] + post[2] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("predict is argmin distance with smallest-id ties") {
    NcmClassifier clf(2, 2, 0.0);
    clf.learn({0.0, 0.0}, 3);
    clf.learn({4.0, 0.0}, 1);
    CHECK(clf.predict({0.0, 0.0}) == 3);  // exact mean
    CHECK(clf.predict({3.5, 0.0}) == 1);  // strictly closer
    CHECK(clf.predict({2.0, 0.0}) == 1);  // tie -> smaller id
    CHECK_THROWS_AS(NcmClassifier(2, 2, 0.0).predict({0.0, 0.0}), EmptyModelError);
}

TEST_CASE("mean update rules") {
    NcmClassifier clf(2, 2, 0.0);
    SUBCASE("first observation becomes the mean") {
        clf.update_mean({3.0, 7.0}, 4);
        CHECK(clf.classes().at(4).mu == FeatureVector{3.0, 7.0});
        CHECK(clf.classes().at(4).n == 1);
    }
    SUBCASE("second sample averages with n = 2") {
        clf.update_mean({0.0, 0.0}, 4);
        clf.update_mean({2.0, 0.0}, 4);
        CHECK(clf.classes().at(4).mu[0] == doctest::Approx(1.0));
        CHECK(clf.classes().at(4).mu[1] == doctest::Approx(0.0));
        CHECK(clf.classes().at(4).n == 2);
    }
    SUBCASE("identical samples keep the mean") {
        for (int i = 0; i < 5; ++i)
            clf.update_mean({1.5, -2.5}, 4);
        CHECK(clf.classes().at(4).mu[0] == doctest::Approx(1.5));
        CHECK(clf.classes().at(4).mu[1] == doctest::Approx(-2.5));
        CHECK(clf.classes().at(4).n == 5);
    }
    SUBCASE("non-finite samples are skipped") {
        CHECK_FALSE(clf.update_mean({std::nan(""), 0.0}, 4));
        CHECK(clf.num_classes() == 0);
    }
}

TEST_CASE("stored means equal batch means of the history") {
    std::mt19937_64 rng(5);
    NcmClassifier clf(3, 2, 0.0);
    std::map<ClassId, std::vector<FeatureVector>> history;
    for (int i = 0; i < 500; ++i) {
        ClassId y = rng() % 4;
        FeatureVector x = oracle::random_vector(rng, 3, 3.0);
        clf.update_mean(x, y);
        history[y].push_back(x);
    }
    for (const auto& [id, samples] : history) {
        FeatureVector batch(3, 0.0);
        for (const auto& s : samples)
            for (std::size_t j = 0; j < 3; ++j)
                batch[j] += s[j];
        for (std::size_t j = 0; j < 3; ++j) {
            batch[j] /= static_cast<double>(samples.size());
            CHECK(clf.classes().at(id).mu[j] == doctest::Approx(batch[j]).epsilon(1e-9));
        }
        CHECK(clf.classes().at(id).n == static_cast<std::int64_t>(samples.size()));
    }
}

TEST_CASE("gradient special cases") {
    SUBCASE("single class gives a zero matrix") {
        NcmClassifier clf(2, 2, 0.0);
        clf.learn({1.0, 2.0}, 1);
        Matrix g = clf.gradient({0.5, 0.5}, 1);
        for (double v : g.data)
            CHECK(v == 0.0);
    }
    SUBCASE("x at the shared mean gives a zero matrix") {
        NcmClassifier clf(1, 1, 0.0);
        clf.learn({1.0}, 1);
        clf.learn({1.0}, 2);
        Matrix g = clf.gradient({1.0}, 1);
        for (double v : g.data)
            CHECK(v == 0.0);
    }
    SUBCASE("two classes in 1-D, scalar value") {
        NcmClassifier clf = two_class_1d();
        Matrix g = clf.gradient({0.0}, 1);
        // only the y=2 term survives: p(2|x) * (2-0)^2 = 4 / (1 + e^2)
        const double expected = 4.0 / (1.0 + std::exp(2.0));
        CHECK(g(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("unknown class is invalid") {
        NcmClassifier clf = two_class_1d();
        CHECK_THROWS_AS(clf.gradient({0.0}, 99), InvalidInputError);
        CHECK_THROWS_AS(NcmClassifier(1, 1, 0.0).gradient({0.0}, 1), EmptyModelError);
    }
}

TEST_CASE("gradient matches finite differences of log p(y|x)") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 1 + rng() % 5;
        const std::size_t m = 1 + rng() % d;
        const int n_classes = 2 + static_cast<int>(rng() % 3);
        NcmClassifier clf(d, m, 0.0);
        std::map<ClassId, FeatureVector> means;
        for (int c = 0; c < n_classes; ++c) {
            FeatureVector mu = oracle::random_vector(rng, d, 2.0);
            clf.update_mean(mu, c);
            means[c] = mu;
        }
        clf.metric().set_w(oracle::random_matrix(rng, m, d, 0.7));
        FeatureVector x = oracle::random_vector(rng, d, 2.0);
        ClassId y = rng() % n_classes;

        Matrix analytic = clf.gradient(x, y);
        Matrix numeric = oracle::finite_difference(
            clf.metric().w(),
            [&](const Matrix& w) { return oracle::ncm_log_posterior(w, means, x, y); });
        CHECK(oracle::max_relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("learn updates mean first, then the metric") {
    SUBCASE("first sample only shrinks W by the leak") {
        NcmClassifier clf(2, 2, 0.1);
        clf.learn({1.0, 1.0}, 0);
        // single class: gradient is zero, so W = 0.9 * I
        CHECK(clf.metric().w()(0, 0) == doctest::Approx(0.9));
        CHECK(clf.metric().w()(0, 1) == doctest::Approx(0.0));
        CHECK(clf.classes().at(0).n == 1);
    }
    SUBCASE("gamma = 0 leaves W untouched") {
        NcmClassifier clf(2, 2, 0.0);
        clf.learn({1.0, 1.0}, 0);
        clf.learn({0.0, 1.0}, 1);
        CHECK(clf.metric().w()(0, 0) == 1.0);
        CHECK(clf.metric().w()(1, 1) == 1.0);
    }
    SUBCASE("small-gamma step does not decrease the sample log-likelihood") {
        NcmClassifier clf(1, 1, 1e-4);
        clf.learn({0.0}, 1);
        clf.learn({2.0}, 2);

        auto means_of = [](const NcmClassifier& c) {
            std::map<ClassId, FeatureVector> means;
            for (const auto& [id, cm] : c.classes())
                means[id] = cm.mu;
            return means;
        };
        const FeatureVector x{0.3};
        const double before_ll =
            oracle::ncm_log_posterior(clf.metric().w(), means_of(clf), x, 1);
        clf.learn(x, 1);
        const double after_ll =
            oracle::ncm_log_posterior(clf.metric().w(), means_of(clf), x, 1);
        CHECK(after_ll >= before_ll - 1e-12);
    }
}

TEST_CASE("posterior normalization on random models") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 1 + rng() % 5;
        const std::size_t m = 1 + rng() % d;
        NcmClassifier clf(d, m, 0.0);
        const int n_classes = 1 + static_cast<int>(rng() % 5);
        for (int c = 0; c < n_classes; ++c)
            clf.update_mean(oracle::random_vector(rng, d, 4.0), c);
        clf.metric().set_w(oracle::random_matrix(rng, m, d));
        auto post = clf.class_posteriors(oracle::random_vector(rng, d, 4.0));
        double sum = 0.0;
        for (const auto& [id, p] : post) {
            // p is positive in real arithmetic; exp underflow can round a
            // very distant class to exactly 0
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

        // predict agrees with exhaustive distance comparison
        FeatureVector q = oracle::random_vector(rng, d, 4.0);
        ClassId best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (const auto& [id, cm] : clf.classes()) {
            double dist = oracle::quadratic_distance(clf.metric().w(), q, cm.mu);
            if (dist < best_dist) {
                best_dist = dist;
                best = id;
            }
        }
        CHECK(clf.predict(q) == best);
    }
}
