#include "wim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace wim::oracle {

ToyDiscreteModel::ToyDiscreteModel(std::size_t x_size, std::size_t y_size)
    : ToyDiscreteModel(TableConditional(x_size, y_size), TableConditional(y_size, x_size)) {}

ToyDiscreteModel::ToyDiscreteModel(TableConditional posterior, TableConditional likelihood)
    : posterior_(std::move(posterior)), likelihood_(std::move(likelihood)) {
    if (posterior_.given_size() != likelihood_.target_size(0) ||
        posterior_.target_size(0) != likelihood_.given_size())
        throw Error("toy model: table shapes do not match");
    if (x_size() < 1 || y_size() < 1 || x_size() > kMaxSize || y_size() > kMaxSize)
        throw Error("toy model: sizes must be in [1, 8]");
}

ToyDiscreteModel ToyDiscreteModel::random(std::size_t x_size, std::size_t y_size, double scale,
                                          RngStream& rng) {
    ToyDiscreteModel m(x_size, y_size);
    Vector t1(static_cast<Eigen::Index>(x_size * y_size)), t2(static_cast<Eigen::Index>(x_size * y_size));
    for (auto& v : t1) v = scale * rng.normal();
    for (auto& v : t2) v = scale * rng.normal();
    m.posterior_.set_params(t1);
    m.likelihood_.set_params(t2);
    return m;
}

DiscreteConditionalPair ToyDiscreteModel::pair() const {
    return DiscreteConditionalPair(posterior_.table(), likelihood_.table());
}

namespace {

// Row-wise conditional tables computed from raw parameters.
struct Tables {
    std::size_t nx, ny;
    std::vector<double> post;  // post[x * ny + y] = p(y | x)
    std::vector<double> lik;   // lik[y * nx + x] = p(x | y)
};

std::vector<double> softmax_rows(const Vector& theta, std::size_t rows, std::size_t cols) {
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cols; ++c) m = std::max(m, theta[static_cast<Eigen::Index>(r * cols + c)]);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::exp(theta[static_cast<Eigen::Index>(r * cols + c)] - m);
        for (std::size_t c = 0; c < cols; ++c)
            out[r * cols + c] = std::exp(theta[static_cast<Eigen::Index>(r * cols + c)] - m) / s;
    }
    return out;
}

Tables tables_of(const ToyDiscreteModel& m) {
    const std::size_t nx = m.x_size(), ny = m.y_size();
    return {nx, ny, softmax_rows(m.posterior().params(), nx, ny), softmax_rows(m.likelihood().params(), ny, nx)};
}

// d log p(t | g) / d theta for a row-softmax table, added with weight w.
void add_log_table_gradient(const std::vector<double>& table, std::size_t cols, std::size_t g, std::size_t t,
                            double w, Vector& acc) {
    for (std::size_t c = 0; c < cols; ++c)
        acc[static_cast<Eigen::Index>(g * cols + c)] += w * ((c == t ? 1.0 : 0.0) - table[g * cols + c]);
}

std::size_t checked_chain_count(std::size_t nx, std::size_t ny, std::size_t n) {
    if (n < 1) throw Error("exact_chain_gradient: chain length must be >= 1");
    double count = 1.0;
    for (std::size_t i = 0; i < n; ++i) count *= static_cast<double>(nx * ny);
    if (count > static_cast<double>(kEnumerationBudget)) throw Error("exact_chain_gradient: enumeration budget exceeded");
    return static_cast<std::size_t>(count);
}

// Decodes chain index k into (x_0, y_0, ..., x_{n-1}, y_{n-1}).
void decode_chain(std::size_t k, std::size_t nx, std::size_t ny, std::size_t n, std::vector<std::size_t>& xs,
                  std::vector<std::size_t>& ys) {
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = k % nx;
        k /= nx;
        ys[i] = k % ny;
        k /= ny;
    }
}

}  // namespace

double chain_log_marginal(const ToyDiscreteModel& model, std::size_t x_star, std::size_t n) {
    const Tables tb = tables_of(model);
    if (x_star >= tb.nx) throw Error("chain_log_marginal: x* out of range");
    const std::size_t count = checked_chain_count(tb.nx, tb.ny, n);
    std::vector<std::size_t> xs(n), ys(n);
    double total = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        decode_chain(k, tb.nx, tb.ny, n, xs, ys);
        double p = 1.0 / static_cast<double>(tb.nx);
        for (std::size_t i = 0; i < n; ++i) {
            p *= tb.post[xs[i] * tb.ny + ys[i]];
            const std::size_t next = i + 1 < n ? xs[i + 1] : x_star;
            p *= tb.lik[ys[i] * tb.nx + next];
        }
        total += p;
    }
    return std::log(total);
}

ExactChainGradient exact_chain_gradient(const ToyDiscreteModel& model, std::size_t x_star, std::size_t n) {
    const Tables tb = tables_of(model);
    if (x_star >= tb.nx) throw Error("exact_chain_gradient: x* out of range");
    const std::size_t count = checked_chain_count(tb.nx, tb.ny, n);
    const auto d1 = static_cast<Eigen::Index>(tb.nx * tb.ny);
    ExactChainGradient out;
    out.g1_terms.assign(n, Vector::Zero(d1));
    out.g2_terms.assign(n, Vector::Zero(d1));

    std::vector<double> weight(count);
    std::vector<std::size_t> xs(n), ys(n);
    double total = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        decode_chain(k, tb.nx, tb.ny, n, xs, ys);
        double p = 1.0 / static_cast<double>(tb.nx);
        for (std::size_t i = 0; i < n; ++i) {
            p *= tb.post[xs[i] * tb.ny + ys[i]];
            p *= tb.lik[ys[i] * tb.nx + (i + 1 < n ? xs[i + 1] : x_star)];
        }
        weight[k] = p;
        total += p;
    }
    for (std::size_t k = 0; k < count; ++k) {
        const double w = weight[k] / total;
        if (w == 0.0) continue;
        decode_chain(k, tb.nx, tb.ny, n, xs, ys);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t dist = n - 1 - i;
            add_log_table_gradient(tb.post, tb.ny, xs[i], ys[i], w, out.g1_terms[dist]);
            add_log_table_gradient(tb.lik, tb.nx, ys[i], i + 1 < n ? xs[i + 1] : x_star, w, out.g2_terms[dist]);
        }
    }
    out.total.g1 = Vector::Zero(d1);
    out.total.g2 = Vector::Zero(d1);
    for (std::size_t k = 0; k < n; ++k) {
        out.total.g1 += out.g1_terms[k];
        out.total.g2 += out.g2_terms[k];
    }
    out.log_marginal = std::log(total);
    return out;
}

GradientPair exact_implicit_step_expectation(const ToyDiscreteModel& model, std::size_t x_star,
                                             std::size_t y_star) {
    const Tables tb = tables_of(model);
    if (x_star >= tb.nx || y_star >= tb.ny) throw Error("exact_implicit_step_expectation: index out of range");
    const auto d = static_cast<Eigen::Index>(tb.nx * tb.ny);
    GradientPair g{Vector::Zero(d), Vector::Zero(d)};
    // Cell indices: posterior x * ny + y, likelihood y * nx + x.
    auto e1 = [&](std::size_t x, std::size_t y) { return static_cast<Eigen::Index>(x * tb.ny + y); };
    auto e2 = [&](std::size_t y, std::size_t x) { return static_cast<Eigen::Index>(y * tb.nx + x); };
    for (std::size_t yt = 0; yt < tb.ny; ++yt) {
        const double p1 = tb.post[x_star * tb.ny + yt];
        for (std::size_t xt = 0; xt < tb.nx; ++xt) {
            const double p2 = p1 * tb.lik[yt * tb.nx + xt];
            for (std::size_t yh = 0; yh < tb.ny; ++yh) {
                const double p3 = p2 * tb.post[xt * tb.ny + yh];
                g.g1[e1(xt, yt)] += p3;
                g.g1[e1(xt, yh)] -= p3;
                g.g1[e1(x_star, y_star)] += p3;
                g.g1[e1(x_star, yt)] -= p3;
                g.g2[e2(yt, x_star)] += p3;
                g.g2[e2(yt, xt)] -= p3;
            }
        }
    }
    return g;
}

DenseStationary dense_stationary(const DiscreteConditionalPair& pair) {
    if (pair.x_size() > 32 || pair.y_size() > 32) throw Error("dense_stationary: sizes must be <= 32");
    const Matrix c = pair.likelihood() * pair.posterior();
    Eigen::EigenSolver<Matrix> es(c);
    if (es.info() != Eigen::Success) throw Error("dense_stationary: eigendecomposition failed");
    Eigen::Index best = -1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double gap = std::abs(es.eigenvalues()[k] - std::complex<double>(1.0, 0.0));
        if (gap < best_gap) {
            best_gap = gap;
            best = k;
        }
    }
    if (best < 0 || best_gap > 1e-8) throw Error("dense_stationary: no eigenvalue within 1e-8 of 1");
    Vector v = es.eigenvectors().col(best).real();
    const double s = v.sum();
    if (s == 0.0) throw Error("dense_stationary: degenerate eigenvector");
    v /= s;
    const Vector py = pair.posterior() * v;
    std::vector<double> px_vals(v.data(), v.data() + v.size());
    std::vector<double> py_vals(py.data(), py.data() + py.size());
    auto to_prob = [](std::vector<double> v) {
        double s = 0.0;
        for (double& p : v) s += (p = std::max(p, 0.0));
        for (double& p : v) p /= s;
        return ProbVector(std::move(v), 1e-9);
    };
    return {to_prob(std::move(px_vals)), to_prob(std::move(py_vals))};
}

seg::Labeling grid_state(std::size_t width, std::size_t height, std::size_t labels, std::size_t k) {
    seg::Labeling y(width, height);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = static_cast<seg::Label>(k % labels);
        k /= labels;
    }
    return y;
}

GridEnumeration enumerate_grid(const seg::SegCrfParams& params, const seg::Image& image,
                               const seg::Labeling& unary) {
    const std::size_t w = image.width, h = image.height, n = w * h, labels = params.labels();
    if (unary.width != w || unary.height != h) throw Error("enumerate_grid: unary shape mismatch");
    if (w > 2 || h > 2 || labels > 3) throw Error("enumerate_grid: budget exceeded");
    std::size_t states = 1;
    for (std::size_t i = 0; i < n; ++i) states *= labels;
    if (states > kGridStateBudget) throw Error("enumerate_grid: budget exceeded");

    struct Pair {
        std::size_t i, j;
        seg::EdgeType type;
        double diff;
    };
    std::vector<Pair> pairs;
    auto at = [&](std::size_t r, std::size_t c) { return r * w + c; };
    auto sqdiff = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t ch = 0; ch < 3; ++ch) s += (image[i][ch] - image[j][ch]) * (image[i][ch] - image[j][ch]);
        return s;
    };
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            if (c + 1 < w) pairs.push_back({at(r, c), at(r, c + 1), seg::EdgeType::horizontal, sqdiff(at(r, c), at(r, c + 1))});
            if (r + 1 < h) pairs.push_back({at(r, c), at(r + 1, c), seg::EdgeType::vertical, sqdiff(at(r, c), at(r + 1, c))});
            if (r + 1 < h && c + 1 < w)
                pairs.push_back({at(r, c), at(r + 1, c + 1), seg::EdgeType::diagonal_down, sqdiff(at(r, c), at(r + 1, c + 1))});
            if (r >= 1 && c + 1 < w)
                pairs.push_back({at(r, c), at(r - 1, c + 1), seg::EdgeType::diagonal_up, sqdiff(at(r, c), at(r - 1, c + 1))});
        }

    GridEnumeration out;
    out.log_weights.resize(states);
    for (std::size_t k = 0; k < states; ++k) {
        const seg::Labeling y = grid_state(w, h, labels, k);
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i) e += params.q(y[i], unary[i]);
        for (const Pair& p : pairs) {
            const std::size_t l = y[p.i], m = y[p.j];
            e += 0.5 * (params.a(p.type, l, m) + params.a(p.type, m, l));
            e += 0.5 * (params.b(p.type, l, m) + params.b(p.type, m, l)) * p.diff;
        }
        out.log_weights[k] = e;
    }
    out.log_partition = log_sum_exp(out.log_weights);
    out.marginals.assign(n * labels, 0.0);
    for (std::size_t k = 0; k < states; ++k) {
        const double p = std::exp(out.log_weights[k] - out.log_partition);
        std::size_t rest = k;
        for (std::size_t i = 0; i < n; ++i) {
            out.marginals[i * labels + rest % labels] += p;
            rest /= labels;
        }
    }
    return out;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

double bayes_error_numeric(const synthetic::GeneratorConfig& generator) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < synthetic::kClasses; ++k) {
        lo = std::min(lo, generator.means[k] - 8.0 * generator.sigmas[k]);
        hi = std::max(hi, generator.means[k] + 8.0 * generator.sigmas[k]);
    }
    const double inv_sqrt_2pi = 0.3989422804014327;
    auto best = [&](double x) {
        double m = 0.0;
        for (std::size_t k = 0; k < synthetic::kClasses; ++k) {
            const double z = (x - generator.means[k]) / generator.sigmas[k];
            m = std::max(m, inv_sqrt_2pi / generator.sigmas[k] * std::exp(-0.5 * z * z));
        }
        return m / static_cast<double>(synthetic::kClasses);
    };
    // Subintervals keep the kinks of the max envelope from hiding between samples.
    const std::size_t pieces = 64;
    double acc = 0.0;
    for (std::size_t p = 0; p < pieces; ++p) {
        const double a = lo + (hi - lo) * static_cast<double>(p) / pieces;
        const double b = lo + (hi - lo) * static_cast<double>(p + 1) / pieces;
        acc += adaptive_simpson(best, a, b, 1e-8 / pieces);
    }
    return 1.0 - acc;
}

Vector central_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& theta,
                                   double h) {
    Vector g(theta.size());
    Vector t = theta;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double orig = t[k];
        t[k] = orig + h;
        const double fp = f(t);
        t[k] = orig - h;
        const double fm = f(t);
        t[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double relative_error(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw Error("relative_error: size mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace wim::oracle
