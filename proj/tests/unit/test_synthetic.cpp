#include <doctest.h>

#include <cmath>

#include "wim/oracle.hpp"
#include "wim/synthetic.hpp"

using namespace wim;
using namespace wim::synthetic;

TEST_CASE("generator configuration") {
    CHECK_NOTHROW(GeneratorConfig::well_specified().validate());
    GeneratorConfig bad;
    bad.sigmas[1] = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    const auto m = GeneratorConfig::misspecified();
    CHECK(m.sigmas[0] == 0.7);
    CHECK(m.sigmas[2] == 1.4);
}

TEST_CASE("generator: degenerate width, class frequencies, moments") {
    GeneratorConfig tight;
    tight.sigmas = {1e-9, 1e-9, 1e-9};
    RngStream rng(51);
    for (const auto& ex : sample_generator(tight, 1000, rng)) REQUIRE(std::abs(ex.x - tight.means[ex.y]) <= 1e-6);

    const auto gen = GeneratorConfig::well_specified();
    const auto big = sample_generator(gen, 300000, rng);
    std::array<double, 3> n{}, s{}, s2{};
    for (const auto& ex : big) {
        n[ex.y] += 1;
        s[ex.y] += ex.x;
        s2[ex.y] += ex.x * ex.x;
    }
    for (std::size_t y = 0; y < 3; ++y) {
        CHECK(std::abs(n[y] / 300000.0 - 1.0 / 3.0) <= 0.01);
        const double mean = s[y] / n[y];
        CHECK(std::abs(mean - gen.means[y]) <= 0.02);
        CHECK(std::abs(s2[y] / n[y] - mean * mean - 1.0) <= 0.02);
    }
}

TEST_CASE("quadratic features") {
    const Vector f = qlr_features(2.0, 0);
    CHECK(f == Vector{{4.0, 2.0, 1.0, 0, 0, 0, 0, 0, 0}});
    CHECK(qlr_features(0.0, 2) == Vector{{0, 0, 0, 0, 0, 0, 0, 0, 1.0}});
    CHECK_THROWS_AS(qlr_features(0.0, 3), Error);

    RngStream rng(52);
    for (int k = 0; k < 50; ++k) {
        Vector th(9);
        for (auto& v : th) v = rng.normal();
        const double x = 3.0 * rng.normal();
        const std::size_t y = rng.below(3);
        const double direct = th[3 * y] * x * x + th[3 * y + 1] * x + th[3 * y + 2];
        CHECK(std::abs(qlr_features(x, y).dot(th) - direct) <= 1e-12);
        CHECK(std::abs(QuadLogReg(th).class_score(x, y) - direct) <= 1e-12);
    }
}

TEST_CASE("posterior normalizes over the three classes") {
    RngStream rng(53);
    Vector th(9);
    for (auto& v : th) v = rng.normal();
    const QuadLogReg post(th);
    for (double x = -10.0; x <= 10.0; x += 0.25) {
        double total = 0.0;
        for (std::size_t y = 0; y < 3; ++y) total += std::exp(exp_fam_log_prob(post, x, y));
        REQUIRE(std::abs(total - 1.0) <= 1e-10);
    }
}

TEST_CASE("MAP decisions") {
    const QuadLogReg zero;
    for (double x : {-3.0, 0.0, 5.0}) CHECK(map_decision(zero, x) == 0);

    const QuadLogReg bayes = bayes_posterior(GeneratorConfig::well_specified());
    CHECK(map_decision(bayes, -2.0) == 0);
    CHECK(map_decision(bayes, 0.1) == 1);
    CHECK(map_decision(bayes, 2.0) == 2);

    RngStream rng(54);
    Vector th(9);
    for (auto& v : th) v = rng.normal();
    Vector shifted = th;
    for (std::size_t y = 0; y < 3; ++y) shifted[3 * y + 2] += 7.5;
    for (int k = 0; k < 100; ++k) {
        const double x = 4.0 * rng.normal();
        REQUIRE(map_decision(QuadLogReg(th), x) == map_decision(QuadLogReg(shifted), x));
    }
}

TEST_CASE("Gaussian likelihood: conversions and sampling") {
    const Moments m = natural_to_moments(-0.5, 1.0);
    CHECK(m.mean == doctest::Approx(1.0));
    CHECK(m.variance == doctest::Approx(1.0));
    CHECK_THROWS_AS(natural_to_moments(-1e-4, 0.0), ImproperDistribution);

    RngStream rng(55);
    for (int k = 0; k < 100; ++k) {
        const double d = -0.001 - 5.0 * rng.uniform(), e = 4.0 * rng.normal();
        const auto [d2, e2] = moments_to_natural(natural_to_moments(d, e));
        REQUIRE(std::abs(d2 - d) <= 1e-12 * std::max(1.0, std::abs(d)));
        REQUIRE(std::abs(e2 - e) <= 1e-12 * std::max(1.0, std::abs(e)));
    }

    const ClassGaussian g(Vector{{-0.5, 0.0, -0.5, 1.0, -2.0, 2.0}});
    for (std::size_t y = 0; y < 3; ++y) {
        const Moments ref = natural_to_moments(g.d(y), g.e(y));
        double s = 0.0, s2 = 0.0;
        const int n = 100000;
        for (int k = 0; k < n; ++k) {
            const double x = gauss_conditional_sample(g, y, rng);
            s += x;
            s2 += x * x;
        }
        CHECK(std::abs(s / n - ref.mean) <= 0.02);
        CHECK(std::abs(s2 / n - (s / n) * (s / n) - ref.variance) <= 0.02);
    }
}

TEST_CASE("Gaussian likelihood: feasibility projection") {
    ClassGaussian free(Vector{{-0.5, 0.0, 0.2, 0.0, -1.0, 0.0}});
    CHECK(free.project());
    CHECK(free.d(1) <= -ClassGaussian::kMinCurvature);
    CHECK(free.d(0) == -0.5);
    CHECK_FALSE(free.project());

    ClassGaussian shared(Vector{{-0.5, 0.0, -1.0, 1.0, -1.5, 0.0}}, true);
    shared.project();
    CHECK(shared.d(0) == shared.d(1));
    CHECK(shared.d(1) == shared.d(2));
    CHECK(shared.d(0) == doctest::Approx(-1.0));

    const ClassGaussian init = ClassGaussian::from_moments(0.5, 2.0, true);
    for (std::size_t y = 0; y < 3; ++y) {
        const Moments m = natural_to_moments(init.d(y), init.e(y));
        CHECK(m.mean == doctest::Approx(0.5));
        CHECK(m.variance == doctest::Approx(2.0));
    }
}

TEST_CASE("Bayes error") {
    GeneratorConfig apart;
    apart.means = {-100.0, 0.0, 100.0};
    CHECK(oracle::bayes_error_numeric(apart) <= 1e-6);
    GeneratorConfig same;
    same.means = {0.0, 0.0, 0.0};
    CHECK(std::abs(oracle::bayes_error_numeric(same) - 2.0 / 3.0) <= 1e-6);

    // Thresholds at +-1/2 give 1 - (4 Phi(1/2) - 1) / 3 in closed form.
    const double phi = 0.5 * std::erfc(-0.5 / std::sqrt(2.0));
    const double e = oracle::bayes_error_numeric(GeneratorConfig::well_specified());
    CHECK(std::abs(e - (1.0 - (4.0 * phi - 1.0) / 3.0)) <= 1e-6);
    CHECK(std::abs(e - 0.411383) <= 1e-6);

    RngStream rng(56);
    const auto data = sample_generator(GeneratorConfig::well_specified(), 200000, rng);
    CHECK(std::abs(error_rate(bayes_posterior(GeneratorConfig::well_specified()), data) - e) <= 0.005);
}
