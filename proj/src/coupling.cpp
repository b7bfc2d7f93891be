#include "wim/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wim {

namespace {

void require_column_stochastic(const Matrix& m, const char* name, double tol) {
    if (m.size() == 0) throw Error(std::string(name) + ": empty matrix");
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if ((m.col(c).array() < 0.0).any() || !m.col(c).allFinite())
            throw Error(std::string(name) + ": negative or non-finite entry");
        if (std::abs(m.col(c).sum() - 1.0) > tol)
            throw Error(std::string(name) + ": column " + std::to_string(c) + " does not sum to 1");
    }
}

ProbVector to_prob(const Vector& v) {
    std::vector<double> p(v.data(), v.data() + v.size());
    double s = 0.0;
    for (double& e : p) {
        e = std::max(e, 0.0);
        s += e;
    }
    for (double& e : p) e /= s;
    return ProbVector(std::move(p));
}

Vector to_eigen(const ProbVector& p) {
    Vector v(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) v[static_cast<Eigen::Index>(i)] = p[i];
    return v;
}

}  // namespace

DiscreteConditionalPair::DiscreteConditionalPair(Matrix posterior, Matrix likelihood, double tol)
    : a_(std::move(posterior)), b_(std::move(likelihood)) {
    if (a_.rows() != b_.cols() || a_.cols() != b_.rows())
        throw Error("conditional pair: A must be |Y|x|X| and B |X|x|Y|");
    require_column_stochastic(a_, "posterior", tol);
    require_column_stochastic(b_, "likelihood", tol);
}

DiscreteConditionalPair DiscreteConditionalPair::from_joint(const Matrix& joint) {
    const Vector px = joint.rowwise().sum();
    const Vector py = joint.colwise().sum().transpose();
    Matrix a(joint.cols(), joint.rows());
    Matrix b(joint.rows(), joint.cols());
    for (Eigen::Index x = 0; x < joint.rows(); ++x)
        for (Eigen::Index y = 0; y < joint.cols(); ++y) {
            a(y, x) = joint(x, y) / px[x];
            b(x, y) = joint(x, y) / py[y];
        }
    return DiscreteConditionalPair(std::move(a), std::move(b), 1e-10);
}

StationaryMarginals stationary_marginals(const DiscreteConditionalPair& pair, double tol,
                                         std::size_t max_iter, PositivityCheck check) {
    const Matrix c = pair.x_transition();
    if (check == PositivityCheck::strict && (c.array() <= 0.0).any())
        throw Error("lemma preconditions violated: B*A has non-positive entries");

    const auto n = c.rows();
    Vector v = Vector::Constant(n, 1.0 / static_cast<double>(n));
    double residual = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Vector next = c * v;
        next /= next.sum();
        residual = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (residual <= tol) {
            const Vector py = pair.posterior() * v;
            return {to_prob(v), to_prob(py), it, (c * v - v).cwiseAbs().maxCoeff()};
        }
    }
    throw NonConvergence("stationary_marginals: power iteration did not converge", residual);
}

StrongImplicitCheck check_strong_implicit(const DiscreteConditionalPair& pair, const ProbVector& px,
                                          const ProbVector& py, double tol) {
    const Matrix& a = pair.posterior();
    const Matrix& b = pair.likelihood();
    if (px.size() != pair.x_size() || py.size() != pair.y_size())
        throw Error("check_strong_implicit: marginal sizes do not match the pair");
    double worst = 0.0;
    for (Eigen::Index x = 0; x < b.rows(); ++x)
        for (Eigen::Index y = 0; y < a.rows(); ++y) {
            const double lhs = px[static_cast<std::size_t>(x)] * a(y, x);
            const double rhs = py[static_cast<std::size_t>(y)] * b(x, y);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return {worst <= tol, worst};
}

double weak_implicit_residual(const DiscreteConditionalPair& pair, const ProbVector& px,
                              const ProbVector& py) {
    const Vector vx = to_eigen(px);
    const Vector vy = to_eigen(py);
    const double r1 = (vy - pair.posterior() * vx).cwiseAbs().maxCoeff();
    const double r2 = (vx - pair.likelihood() * vy).cwiseAbs().maxCoeff();
    return std::max(r1, r2);
}

Matrix implied_joint(const DiscreteConditionalPair& pair, const ProbVector& px) {
    Matrix j = pair.posterior().transpose();
    for (Eigen::Index x = 0; x < j.rows(); ++x) j.row(x) *= px[static_cast<std::size_t>(x)];
    return j;
}

std::size_t simulate_observation_chain(const DiscreteConditionalPair& pair, std::size_t x0,
                                       std::size_t transitions, RngStream& rng) {
    const Matrix& a = pair.posterior();
    const Matrix& b = pair.likelihood();
    std::size_t x = x0;
    std::vector<double> col;
    for (std::size_t k = 0; k < transitions; ++k) {
        col.assign(a.col(static_cast<Eigen::Index>(x)).data(),
                   a.col(static_cast<Eigen::Index>(x)).data() + a.rows());
        const std::size_t y = sample_discrete(ProbVector(col, 1e-9), rng);
        col.assign(b.col(static_cast<Eigen::Index>(y)).data(),
                   b.col(static_cast<Eigen::Index>(y)).data() + b.rows());
        x = sample_discrete(ProbVector(col, 1e-9), rng);
    }
    return x;
}

Matrix weakness_likelihood(const Matrix& energy_xy, const Vector& energy_x, double alpha) {
    if (energy_xy.rows() != energy_x.size() || energy_xy.rows() == 0 || energy_xy.cols() == 0)
        throw Error("weakness_likelihood: dimension mismatch");
    if (!std::isfinite(alpha)) throw Error("weakness_likelihood: alpha must be finite");
    Matrix out(energy_xy.rows(), energy_xy.cols());
    std::vector<double> w(static_cast<std::size_t>(energy_xy.rows()));
    for (Eigen::Index y = 0; y < energy_xy.cols(); ++y) {
        for (Eigen::Index x = 0; x < energy_xy.rows(); ++x)
            w[static_cast<std::size_t>(x)] = alpha * energy_xy(x, y) + energy_x[x];
        const ProbVector p = normalize(w);
        for (Eigen::Index x = 0; x < energy_xy.rows(); ++x) out(x, y) = p[static_cast<std::size_t>(x)];
    }
    return out;
}

}  // namespace wim
