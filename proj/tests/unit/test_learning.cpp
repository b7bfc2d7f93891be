#include <doctest.h>

#include <cmath>

#include "wim/learning.hpp"
#include "wim/oracle.hpp"
#include "wim/synthetic.hpp"

using namespace wim;

namespace {

// p(y | x; theta) = p(y; theta): a posterior that ignores its input.
struct LabelPrior {
    using Given = std::size_t;
    using Target = std::size_t;
    Vector theta = Vector::Zero(3);

    std::size_t feature_dim() const { return 3; }
    std::size_t target_size(Given = 0) const { return 3; }
    const Vector& params() const { return theta; }
    void set_params(const Vector& t) { theta = t; }
    bool project() { return false; }
    void accumulate_statistics(Given, Target y, double w, Vector& acc) const { acc[static_cast<Eigen::Index>(y)] += w; }
    double log_prob(Given, Target y) const {
        const double z = std::log(theta.array().exp().sum());
        return theta[static_cast<Eigen::Index>(y)] - z;
    }
    Target sample(Given, RngStream& rng) const {
        return sample_discrete(normalize(std::vector<double>(theta.begin(), theta.end())), rng);
    }
};

Dataset<std::size_t, std::size_t> table_data(RngStream& rng, std::size_t n) {
    Dataset<std::size_t, std::size_t> d;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t x = rng.below(3);
        d.push_back({x, (x + (rng.uniform() < 0.7 ? 0 : 1 + rng.below(2))) % 3});
    }
    return d;
}

}  // namespace

TEST_CASE("TrainConfig validation and schedules") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.step_size = -1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.chain_steps = 4;
    CHECK_THROWS_AS(c.validate(), Error);

    c = {};
    c.step_size = 0.5;
    CHECK(step_at(c, 0) == 0.5);
    CHECK(step_at(c, 1000) == 0.5);
    c.schedule = StepSchedule::inverse_t;
    c.decay_offset = 10.0;
    CHECK(step_at(c, 10) == doctest::Approx(0.25));
    c.step_floor = 0.3;
    CHECK(step_at(c, 10) == doctest::Approx(0.3));
    c.schedule = StepSchedule::inverse_sqrt_t;
    c.step_floor = 0.0;
    CHECK(step_at(c, 30) == doctest::Approx(0.25));
}

TEST_CASE("clipping and batch averaging") {
    Vector g{{3.0, -20.0}};
    clip_inf_norm(g, 10.0);
    CHECK(g[1] == doctest::Approx(-10.0));
    CHECK(g[0] == doctest::Approx(1.5));
    Vector h{{3.0, -20.0}};
    clip_inf_norm(h, 0.0);
    CHECK(h[1] == -20.0);

    RngStream rng(31);
    std::vector<GradientPair> grads;
    for (int k = 0; k < 5; ++k) {
        GradientPair p{Vector(4), Vector(2)};
        for (auto& v : p.g1) v = rng.normal();
        for (auto& v : p.g2) v = rng.normal();
        grads.push_back(p);
    }
    const GradientPair inc = batch_update(grads, 0.3, 0.0);
    Vector m1 = Vector::Zero(4), m2 = Vector::Zero(2);
    for (const auto& p : grads) {
        m1 += p.g1 / 5.0;
        m2 += p.g2 / 5.0;
    }
    CHECK((inc.g1 - 0.3 * m1).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((inc.g2 - 0.3 * m2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("implicit step vanishes when the chain repeats the data") {
    // Point masses: every x maps to y = 2 and every y to x = 1.
    Vector post = Vector::Constant(9, -60.0), lik = Vector::Constant(9, -60.0);
    for (std::size_t x = 0; x < 3; ++x) post[static_cast<Eigen::Index>(3 * x + 2)] = 60.0;
    for (std::size_t y = 0; y < 3; ++y) lik[static_cast<Eigen::Index>(3 * y + 1)] = 60.0;
    const TableConditional p(3, 3, post), l(3, 3, lik);
    RngStream rng(32);
    for (int k = 0; k < 100; ++k) {
        const GradientPair g = implicit_sgd_step(p, l, std::size_t{1}, std::size_t{2}, rng);
        REQUIRE(g.g1.cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(g.g2.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("implicit step structure") {
    RngStream rng(33);
    const auto model = oracle::ToyDiscreteModel::random(4, 3, 1.0, rng);
    const auto& post = model.posterior();
    const auto& lik = model.likelihood();
    for (int k = 0; k < 200; ++k) {
        const std::size_t xs = rng.below(4), ys = rng.below(3);
        RngStream a = rng.split(k), b = rng.split(k);
        const GradientPair g = implicit_sgd_step(post, lik, xs, ys, a);
        const auto chain = sample_reverse_chain(post, lik, xs, 3, b);
        const std::size_t yt = chain.labels()[0], xt = chain.observations()[1], yh = chain.labels()[1];
        const Vector g1 = statistics(post, xt, yt) - statistics(post, xt, yh) + statistics(post, xs, ys) -
                          statistics(post, xs, yt);
        const Vector g2 = statistics(lik, yt, xs) - statistics(lik, yt, xt);
        REQUIRE((g.g1 - g1).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((g.g2 - g2).cwiseAbs().maxCoeff() == 0.0);

        // Without the generated pair the update is the sampled conditional-likelihood gradient.
        Chain<std::size_t, std::size_t> head(ChainDirection::reverse, xs);
        head.push_label(yt);
        const GradientPair cl = chain_gradient(post, lik, head, ys);
        REQUIRE((cl.g1 - (statistics(post, xs, ys) - statistics(post, xs, yt))).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(cl.g2.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("implicit step mean matches enumeration") {
    RngStream rng(34);
    const auto model = oracle::ToyDiscreteModel::random(4, 3, 1.0, rng);
    const GradientPair exact = oracle::exact_implicit_step_expectation(model, 3, 0);
    const int n = 200000;
    Vector s = Vector::Zero(12), s2 = Vector::Zero(12);
    for (int k = 0; k < n; ++k) {
        const Vector g1 = implicit_sgd_step(model.posterior(), model.likelihood(), std::size_t{3}, std::size_t{0}, rng).g1;
        s += g1;
        s2 += g1.cwiseProduct(g1);
    }
    for (Eigen::Index c = 0; c < 12; ++c) {
        const double mean = s[c] / n;
        const double se = std::sqrt(std::max(0.0, s2[c] / n - mean * mean) / (n - 1));
        if (se == 0.0)
            CHECK(std::abs(mean - exact.g1[c]) <= 1e-12);
        else
            CHECK(std::abs(mean - exact.g1[c]) <= 4.0 * se);
    }
}

TEST_CASE("conditional-likelihood gradient") {
    const TableConditional zero(3, 4);
    const Vector g = cl_gradient(zero, std::size_t{1}, std::size_t{2});
    Vector mean = Vector::Zero(12);
    for (std::size_t y = 0; y < 4; ++y) mean += statistics(zero, 1, y) / 4.0;
    CHECK((g - (statistics(zero, 1, 2) - mean)).cwiseAbs().maxCoeff() <= 1e-15);

    RngStream rng(35);
    for (int k = 0; k < 10; ++k) {
        Vector th(9);
        for (auto& v : th) v = 0.5 * rng.normal();
        const synthetic::QuadLogReg post(th);
        const double x = 2.0 * rng.normal();
        const std::size_t y = rng.below(3);
        const Vector fd = oracle::central_difference_gradient(
            [&](const Vector& t) { return exp_fam_log_prob(synthetic::QuadLogReg(t), x, y); }, th);
        CHECK(oracle::relative_error(cl_gradient(post, x, y), fd) <= 1e-6);
    }
}

TEST_CASE("conditional likelihood converges to a stationary point") {
    RngStream rng(36);
    const auto data = table_data(rng, 60);
    TableConditional post(3, 3);
    TrainConfig c;
    c.step_size = 2.0;
    c.epochs = 3000;
    c.batch_size = data.size();
    c.clip = 0.0;
    train_conditional_likelihood(data, post, c);
    Vector g = Vector::Zero(9);
    for (const auto& ex : data) g += cl_gradient(post, ex.x, ex.y) / static_cast<double>(data.size());
    CHECK(g.norm() <= 1e-4);
}

TEST_CASE("conditional likelihood: regularization, perfect fit, zero step, determinism") {
    RngStream rng(37);
    const auto data = table_data(rng, 40);
    TrainConfig c;
    c.epochs = 400;
    c.batch_size = 8;
    c.l2_weight = 1e3;
    c.step_size = 1e-4;
    TableConditional strong(3, 3);
    train_conditional_likelihood(data, strong, c);
    CHECK(strong.params().cwiseAbs().maxCoeff() <= 1e-3);

    TrainConfig fit;
    fit.step_size = 1.0;
    fit.epochs = 500;
    fit.clip = 0.0;
    const Dataset<std::size_t, std::size_t> single{{0, 1}};
    TableConditional one(3, 3);
    const TrainResult r = train_conditional_likelihood(single, one, fit);
    CHECK(r.trace.back() < 0.0);
    CHECK(r.trace.back() > -0.01);
    CHECK(r.trace.back() > r.trace.front());

    TrainConfig still;
    still.step_size = 0.0;
    still.epochs = 20;
    TableConditional frozen(3, 3, Vector::Constant(9, 0.3));
    train_conditional_likelihood(data, frozen, still);
    CHECK(frozen.params() == Vector::Constant(9, 0.3));

    TrainConfig s;
    s.step_size = 0.1;
    s.epochs = 30;
    s.batch_size = 7;
    s.seed = 99;
    TableConditional a(3, 3), b(3, 3);
    const auto ra = train_conditional_likelihood(data, a, s);
    const auto rb = train_conditional_likelihood(data, b, s);
    CHECK(ra.theta1 == rb.theta1);
    CHECK(ra.trace == rb.trace);
}

TEST_CASE("conditional likelihood on the generator approaches the Bayes error") {
    RngStream rng(38);
    const auto gen = synthetic::GeneratorConfig::well_specified();
    const auto train = synthetic::sample_generator(gen, 500, rng);
    const auto test = synthetic::sample_generator(gen, 100000, rng);
    synthetic::QuadLogReg post;
    TrainConfig c;
    c.step_size = 0.3;
    c.epochs = 2000;
    c.batch_size = train.size();
    train_conditional_likelihood(train, post, c);
    CHECK(synthetic::error_rate(post, test) - oracle::bayes_error_numeric(gen) <= 0.02);
}

TEST_CASE("implicit training: zero step, determinism, divergence") {
    RngStream rng(39);
    const auto data = table_data(rng, 30);
    TrainConfig c;
    c.step_size = 0.0;
    c.epochs = 5;
    TableConditional p(3, 3, Vector::Constant(9, 0.1)), l(3, 3, Vector::Constant(9, -0.2));
    train_implicit(data, p, l, c);
    CHECK(p.params() == Vector::Constant(9, 0.1));
    CHECK(l.params() == Vector::Constant(9, -0.2));

    c.step_size = 0.3;
    c.seed = 5;
    TableConditional p1(3, 3), l1(3, 3), p2(3, 3), l2(3, 3);
    const auto r1 = train_implicit(data, p1, l1, c);
    const auto r2 = train_implicit(data, p2, l2, c);
    CHECK(r1.theta1 == r2.theta1);
    CHECK(r1.theta2 == r2.theta2);

    c.step_size = 1e308;
    c.clip = 0.0;
    TableConditional p3(3, 3, Vector::Constant(9, 1.7e308)), l3(3, 3);
    CHECK_THROWS_AS(train_implicit(data, p3, l3, c), DivergenceError);
}

TEST_CASE("discriminative extreme: y-independent likelihood has zero mean shared gradient") {
    RngStream rng(40);
    const auto lik = synthetic::ClassGaussian::from_moments(0.3, 1.5, true);
    Vector th(9);
    for (auto& v : th) v = 0.5 * rng.normal();
    const synthetic::QuadLogReg post(th);
    const int n = 100000;
    Eigen::Vector2d s = Eigen::Vector2d::Zero(), s2 = Eigen::Vector2d::Zero();
    for (int k = 0; k < n; ++k) {
        const double x_star = 0.3 + std::sqrt(1.5) * rng.normal();
        const GradientPair g = implicit_sgd_step(post, lik, x_star, rng.below(3), rng);
        // Gradient with respect to the parameters shared by all classes.
        Eigen::Vector2d shared(g.g2[0] + g.g2[2] + g.g2[4], g.g2[1] + g.g2[3] + g.g2[5]);
        s += shared;
        s2 += shared.cwiseProduct(shared);
    }
    for (int c = 0; c < 2; ++c) {
        const double mean = s[c] / n;
        const double se = std::sqrt((s2[c] / n - mean * mean) / (n - 1));
        CHECK(std::abs(mean) <= 4.0 * se);
    }
}

TEST_CASE("generative extreme: an input-blind posterior fits the label marginal") {
    RngStream rng(41);
    Dataset<std::size_t, std::size_t> data;
    const std::vector<double> freq{0.5, 0.3, 0.2};
    for (std::size_t k = 0; k < 100; ++k) data.push_back({rng.below(4), k < 50 ? 0u : (k < 80 ? 1u : 2u)});
    LabelPrior prior;
    TableConditional lik(3, 4);
    TrainConfig c;
    c.step_size = 0.5;
    c.schedule = StepSchedule::inverse_t;
    c.decay_offset = 50.0;
    c.epochs = 300;
    c.batch_size = 20;
    c.seed = 3;
    train_implicit(data, prior, lik, c);
    for (std::size_t y = 0; y < 3; ++y) CHECK(std::exp(prior.log_prob(0, y)) == doctest::Approx(freq[y]).epsilon(0.1));
}
