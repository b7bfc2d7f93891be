#include "wim/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "wim/oracle.hpp"

namespace wim::verify {

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
CheckResult timed(F&& body) {
    const auto start = Clock::now();
    CheckResult r = body();
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

Vector random_vector(std::size_t n, double scale, RngStream& rng) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = scale * rng.normal();
    return v;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

Matrix random_joint(std::size_t nx, std::size_t ny, RngStream& rng) {
    Matrix j(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(ny));
    for (Eigen::Index x = 0; x < j.rows(); ++x)
        for (Eigen::Index y = 0; y < j.cols(); ++y) j(x, y) = std::exp(rng.normal());
    return j / j.sum();
}

}  // namespace

CheckResult check_stationary(std::uint64_t seed, std::size_t pairs) {
    return timed([&] {
        const RngStream root(seed);
        double worst_residual = 0.0, worst_dense = 0.0;
        for (std::size_t k = 0; k < pairs; ++k) {
            RngStream rng = root.split(k);
            const std::size_t nx = 1 + rng.below(8), ny = 1 + rng.below(8);
            const auto model = oracle::ToyDiscreteModel::random(nx, ny, 1.0, rng);
            const DiscreteConditionalPair pair = model.pair();
            const StationaryMarginals sm = stationary_marginals(pair);
            const oracle::DenseStationary dense = oracle::dense_stationary(pair);
            worst_residual = std::max(worst_residual, weak_implicit_residual(pair, sm.px, sm.py));
            worst_dense = std::max({worst_dense, max_abs_diff(sm.px.values(), dense.px.values()),
                                    max_abs_diff(sm.py.values(), dense.py.values())});
        }
        CheckResult r;
        r.name = "stationary marginals";
        r.value = worst_residual;
        r.threshold = 1e-10;
        r.pass = worst_residual <= 1e-10 && worst_dense <= 1e-8;
        r.detail = fmt("%.0f pairs: max fixed-point residual %.3g, max |power - dense| %.3g",
                       static_cast<double>(pairs), worst_residual, worst_dense);
        return r;
    });
}

CheckResult check_strong_vs_weak(std::uint64_t seed, std::size_t pairs) {
    return timed([&] {
        const RngStream root(seed);
        double worst_joint = 0.0, min_counter = INFINITY, worst_weak = 0.0;
        for (std::size_t k = 0; k < pairs; ++k) {
            RngStream rng = root.split(k);
            const std::size_t nx = 2 + rng.below(7), ny = 2 + rng.below(7);
            const auto derived = DiscreteConditionalPair::from_joint(random_joint(nx, ny, rng));
            const StationaryMarginals sm = stationary_marginals(derived);
            worst_joint = std::max(worst_joint, check_strong_implicit(derived, sm.px, sm.py, 1e-12).max_residual);

            // Likelihood identical for every y, posterior varying with x.
            const auto model = oracle::ToyDiscreteModel::random(nx, ny, 2.0, rng);
            const Vector column = random_vector(nx, 1.0, rng);
            const Vector energy_x = column;
            const Matrix flat = weakness_likelihood(Matrix::Zero(static_cast<Eigen::Index>(nx),
                                                                 static_cast<Eigen::Index>(ny)),
                                                    energy_x, 0.0);
            const DiscreteConditionalPair counter(model.posterior().table(), flat);
            const StationaryMarginals cm = stationary_marginals(counter);
            const StrongImplicitCheck strong = check_strong_implicit(counter, cm.px, cm.py, 1e-3);
            min_counter = std::min(min_counter, strong.max_residual);
            worst_weak = std::max(worst_weak, weak_implicit_residual(counter, cm.px, cm.py));
        }
        CheckResult r;
        r.name = "strong vs weak implicit";
        r.value = worst_joint;
        r.threshold = 1e-12;
        r.pass = worst_joint <= 1e-12 && min_counter > 1e-3 && worst_weak <= 1e-10;
        r.detail = fmt("derived joints: max residual %.3g; counterexamples: min residual %.3g, "
                       "max fixed-point residual %.3g",
                       worst_joint, min_counter, worst_weak);
        return r;
    });
}

CheckResult check_gradients(std::uint64_t seed) {
    return timed([&] {
        const RngStream root(seed);
        double worst_cl = 0.0, worst_chain = 0.0;

        RngStream rng = root.split(0);
        for (std::size_t k = 0; k < 20; ++k) {
            const synthetic::QuadLogReg post(random_vector(synthetic::QuadLogReg::kDim, 0.5, rng));
            const double x = 2.0 * rng.normal();
            const std::size_t y = rng.below(synthetic::kClasses);
            const Vector fd = oracle::central_difference_gradient(
                [&](const Vector& t) { return synthetic::QuadLogReg(t).log_prob(x, y); }, post.params());
            worst_cl = std::max(worst_cl, oracle::relative_error(cl_gradient(post, x, y), fd));

            const std::size_t ng = 1 + rng.below(6), nt = 1 + rng.below(6);
            const TableConditional table(ng, nt, random_vector(ng * nt, 1.0, rng));
            const std::size_t g = rng.below(ng), t = rng.below(nt);
            const Vector fd_table = oracle::central_difference_gradient(
                [&](const Vector& th) { return TableConditional(ng, nt, th).log_prob(g, t); }, table.params());
            worst_cl = std::max(worst_cl, oracle::relative_error(cl_gradient(table, g, t), fd_table));
        }

        for (std::size_t k = 0; k < 10; ++k) {
            RngStream mrng = root.split(1 + k);
            const auto model = oracle::ToyDiscreteModel::random(4, 3, 1.0, mrng);
            const std::size_t x_star = mrng.below(4);
            const auto n1 = static_cast<Eigen::Index>(model.posterior().feature_dim());
            const auto n2 = static_cast<Eigen::Index>(model.likelihood().feature_dim());
            Vector theta(n1 + n2);
            theta << model.posterior().params(), model.likelihood().params();
            for (std::size_t n = 1; n <= 3; ++n) {
                const auto exact = oracle::exact_chain_gradient(model, x_star, n);
                const Vector fd = oracle::central_difference_gradient(
                    [&](const Vector& th) {
                        oracle::ToyDiscreteModel m = model;
                        m.posterior().set_params(th.head(n1));
                        m.likelihood().set_params(th.tail(n2));
                        return oracle::chain_log_marginal(m, x_star, n);
                    },
                    theta);
                Vector analytic(n1 + n2);
                analytic << exact.total.g1, exact.total.g2;
                worst_chain = std::max(worst_chain, oracle::relative_error(analytic, fd));
            }
        }
        CheckResult r;
        r.name = "gradients vs finite differences";
        r.value = std::max(worst_cl, worst_chain);
        r.threshold = 1e-6;
        r.pass = r.value <= r.threshold;
        r.detail = fmt("conditional likelihood rel. error %.3g, chain gradient (n <= 3) rel. error %.3g",
                       worst_cl, worst_chain);
        return r;
    });
}

CheckResult check_implicit_step(std::uint64_t seed, std::size_t steps, double sigmas) {
    return timed([&] {
        RngStream rng(seed);
        const auto model = oracle::ToyDiscreteModel::random(4, 3, 1.0, rng);
        const std::size_t x_star = rng.below(4), y_star = rng.below(3);
        const GradientPair exact = oracle::exact_implicit_step_expectation(model, x_star, y_star);

        const auto n1 = exact.g1.size(), n2 = exact.g2.size();
        Vector sum = Vector::Zero(n1 + n2), sum_sq = Vector::Zero(n1 + n2);
        Vector both(n1 + n2);
        for (std::size_t k = 0; k < steps; ++k) {
            const GradientPair g = implicit_sgd_step(model.posterior(), model.likelihood(), x_star, y_star, rng);
            both << g.g1, g.g2;
            sum += both;
            sum_sq += both.cwiseProduct(both);
        }
        Vector target(n1 + n2);
        target << exact.g1, exact.g2;
        const double n = static_cast<double>(steps);
        double worst_z = 0.0;
        bool pass = true;
        for (Eigen::Index c = 0; c < target.size(); ++c) {
            const double mean = sum[c] / n;
            const double var = std::max(0.0, sum_sq[c] / n - mean * mean) * n / (n - 1.0);
            const double se = std::sqrt(var / n);
            const double diff = std::abs(mean - target[c]);
            if (se == 0.0) {
                if (diff > 1e-12) pass = false;
                continue;
            }
            worst_z = std::max(worst_z, diff / se);
        }
        CheckResult r;
        r.name = "implicit step unbiasedness";
        r.value = worst_z;
        r.threshold = sigmas;
        r.pass = pass && worst_z <= sigmas;
        r.detail = fmt("%.0f steps, %.0f coordinates: max |mean - exact| / stderr = %.3f", n,
                       static_cast<double>(target.size()), worst_z);
        return r;
    });
}

CheckResult check_exact_recovery(std::uint64_t seed, std::size_t samples, double max_kl) {
    return timed([&] {
        const RngStream root(seed);
        RngStream rng = root.split(0);
        constexpr std::size_t nx = 4, ny = 3;
        const Matrix joint = random_joint(nx, ny, rng);
        std::vector<double> flat(nx * ny);
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) flat[x * ny + y] = joint(static_cast<Eigen::Index>(x),
                                                                          static_cast<Eigen::Index>(y));
        const ProbVector cells(flat, 1e-9);
        Dataset<std::size_t, std::size_t> data;
        for (std::size_t t = 0; t < samples; ++t) {
            const std::size_t k = sample_discrete(cells, rng);
            data.push_back({k / ny, k % ny});
        }

        TableConditional posterior(nx, ny), likelihood(ny, nx);
        TrainConfig config;
        config.step_size = 2.0;
        config.schedule = StepSchedule::inverse_t;
        config.decay_offset = 200.0;
        config.epochs = 100;
        config.batch_size = 100;
        config.clip = 0.0;
        config.seed = root.split(1).next_u64();
        train_implicit(data, posterior, likelihood, config);

        const DiscreteConditionalPair learned(posterior.table(), likelihood.table(), 1e-9);
        const StationaryMarginals sm = stationary_marginals(learned);
        const Matrix model_joint = implied_joint(learned, sm.px);
        double kl = 0.0;
        for (Eigen::Index x = 0; x < joint.rows(); ++x)
            for (Eigen::Index y = 0; y < joint.cols(); ++y)
                kl += joint(x, y) * std::log(joint(x, y) / model_joint(x, y));
        CheckResult r;
        r.name = "exact-case recovery";
        r.value = kl;
        r.threshold = max_kl;
        r.pass = kl <= max_kl;
        r.detail = fmt("T = %.0f pairs from a 4 x 3 joint: KL(true || learned) = %.5f nats",
                       static_cast<double>(samples), kl);
        return r;
    });
}

CheckResult check_gibbs(std::uint64_t seed, std::size_t sweeps, double max_tv) {
    return timed([&] {
        RngStream rng(seed);
        constexpr std::size_t w = 2, h = 2, labels = 2;
        const seg::GridGraph graph(w, h);
        seg::SegCrfParams params(labels);
        params.set_vector(random_vector(params.vector().size(), 1.0, rng));
        seg::Image image(w, h);
        for (auto& px : image.pixels)
            for (double& ch : px) ch = rng.uniform();
        seg::Labeling unary(w, h);
        for (auto& l : unary.labels) l = static_cast<seg::Label>(rng.below(labels));

        const oracle::GridEnumeration exact = oracle::enumerate_grid(params, image, unary);
        const seg::CrfKernel kernel(params, graph);
        const seg::CrfInput input(graph, image, unary);

        // Detailed balance of each single-site update against the enumerated
        // stationary distribution.
        const std::size_t states = exact.log_weights.size();
        double worst_balance = 0.0;
        std::vector<double> local(labels);
        auto transition = [&](const seg::Labeling& from, std::size_t site, std::size_t label) {
            kernel.local_log_weights(input, from, site, local);
            return normalize(local)[label];
        };
        for (std::size_t s = 0; s < states; ++s) {
            const seg::Labeling from = oracle::grid_state(w, h, labels, s);
            const double pi_s = std::exp(exact.log_weights[s] - exact.log_partition);
            for (std::size_t site = 0; site < w * h; ++site)
                for (std::size_t l = 0; l < labels; ++l) {
                    seg::Labeling to = from;
                    to[site] = static_cast<seg::Label>(l);
                    std::size_t s2 = 0, place = 1;
                    for (std::size_t i = 0; i < w * h; ++i, place *= labels) s2 += to[i] * place;
                    const double pi_t = std::exp(exact.log_weights[s2] - exact.log_partition);
                    const double flow = pi_s * transition(from, site, l) - pi_t * transition(to, site, from[site]);
                    worst_balance = std::max(worst_balance, std::abs(flow));
                }
        }

        seg::Labeling y(w, h);
        for (auto& l : y.labels) l = static_cast<seg::Label>(rng.below(labels));
        seg::crf_gibbs_sweep(kernel, input, y, rng, 1000);
        std::vector<double> freq(w * h * labels, 0.0);
        for (std::size_t k = 0; k < sweeps; ++k) {
            seg::crf_gibbs_sweep(kernel, input, y, rng);
            for (std::size_t i = 0; i < w * h; ++i) freq[i * labels + y[i]] += 1.0;
        }
        double worst_tv = 0.0;
        for (std::size_t i = 0; i < w * h; ++i) {
            std::vector<double> p(labels), q(labels);
            for (std::size_t l = 0; l < labels; ++l) {
                p[l] = freq[i * labels + l] / static_cast<double>(sweeps);
                q[l] = exact.marginals[i * labels + l];
            }
            worst_tv = std::max(worst_tv, total_variation(p, q));
        }
        CheckResult r;
        r.name = "grid Gibbs sampler";
        r.value = worst_tv;
        r.threshold = max_tv;
        r.pass = worst_tv <= max_tv && worst_balance <= 1e-10;
        r.detail = fmt("%.0f sweeps: max per-pixel TV %.4f; max detailed-balance violation %.3g",
                       static_cast<double>(sweeps), worst_tv, worst_balance);
        return r;
    });
}

CheckResult check_bayes_error(std::uint64_t seed) {
    return timed([&] {
        const auto gen = synthetic::GeneratorConfig::well_specified();
        const double numeric = oracle::bayes_error_numeric(gen);
        RngStream rng(seed);
        constexpr std::size_t n = 1000000;
        const auto data = synthetic::sample_generator(gen, n, rng);
        const double mc = synthetic::error_rate(synthetic::bayes_posterior(gen), data);
        const double se = std::sqrt(numeric * (1.0 - numeric) / static_cast<double>(n));

        synthetic::GeneratorConfig same = gen;
        same.means = {0.0, 0.0, 0.0};
        synthetic::GeneratorConfig apart = gen;
        apart.means = {-100.0, 0.0, 100.0};
        const double e_same = oracle::bayes_error_numeric(same);
        const double e_apart = oracle::bayes_error_numeric(apart);

        CheckResult r;
        r.name = "Bayes error quadrature";
        r.value = std::abs(numeric - mc) / se;
        r.threshold = 4.0;
        r.pass = r.value <= 4.0 && std::abs(e_same - 2.0 / 3.0) <= 1e-6 && e_apart <= 1e-6;
        r.detail = fmt("quadrature %.6f vs Monte Carlo %.6f (%.2f stderr)", numeric, mc, r.value);
        return r;
    });
}

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed, bool quick) {
    const RngStream root(seed);
    std::vector<CheckResult> out;
    out.push_back(check_stationary(root.split(1).next_u64(), quick ? 50 : 200));
    out.push_back(check_strong_vs_weak(root.split(2).next_u64()));
    out.push_back(check_gradients(root.split(3).next_u64()));
    out.push_back(check_implicit_step(root.split(4).next_u64(), quick ? 50000 : 200000));
    out.push_back(check_exact_recovery(root.split(5).next_u64()));
    out.push_back(check_gibbs(root.split(6).next_u64(), quick ? 30000 : 100000));
    out.push_back(check_bayes_error(root.split(7).next_u64()));
    return out;
}

std::string format_result(const CheckResult& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s  %-32s %s (%.2fs)", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                  r.detail.c_str(), r.seconds);
    return buf;
}

}  // namespace wim::verify
