#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcbf/lifted_model.hpp"
#include "pcbf/matrix.hpp"

namespace pcbf {

// Slack used for every closed-set membership test.
inline constexpr double kBarrierSlack = 1e-9;

class RelativeDegreeMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// h(x) = A_cbf x + b_cbf >= 0, one row per half-space.
class PolytopicBarrier {
public:
    PolytopicBarrier(Matrix a_cbf, Matrix b_cbf) : a_cbf_(std::move(a_cbf)), b_cbf_(std::move(b_cbf)) {
        if (b_cbf_.cols() != 1 || b_cbf_.rows() != a_cbf_.rows())
            throw DimensionError("PolytopicBarrier: offset " + b_cbf_.shape() + " incompatible with rows of " +
                                 a_cbf_.shape());
        for (std::size_t i = 0; i < a_cbf_.rows(); ++i)
            if (a_cbf_.row_at(i).max_abs() == 0.0)
                throw std::invalid_argument("PolytopicBarrier: row " + std::to_string(i) + " of A_cbf is zero");
        a_cbf_.require_finite("PolytopicBarrier");
        b_cbf_.require_finite("PolytopicBarrier");
    }

    [[nodiscard]] const Matrix& a_cbf() const noexcept { return a_cbf_; }
    [[nodiscard]] const Matrix& b_cbf() const noexcept { return b_cbf_; }
    [[nodiscard]] std::size_t num_constraints() const noexcept { return a_cbf_.rows(); }
    [[nodiscard]] std::size_t state_dim() const noexcept { return a_cbf_.cols(); }

private:
    Matrix a_cbf_;
    Matrix b_cbf_;
};

// Interval bounds lo_i <= x_i <= hi_i on each listed state, rows ordered
// (x_1 >= lo_1, x_1 <= hi_1, x_2 >= lo_2, ...).
[[nodiscard]] inline PolytopicBarrier box_barrier(const std::vector<std::pair<double, double>>& bounds) {
    const std::size_t n = bounds.size();
    Matrix a(2 * n, n);
    Matrix b(2 * n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = bounds[i];
        if (!(lo < hi))
            throw std::invalid_argument("box_barrier: lower bound must be below upper bound on state " +
                                        std::to_string(i));
        a(2 * i, i) = 1.0;
        b(2 * i, 0) = -lo;
        a(2 * i + 1, i) = -1.0;
        b(2 * i + 1, 0) = hi;
    }
    return PolytopicBarrier(std::move(a), std::move(b));
}

[[nodiscard]] inline Matrix eval_barrier(const PolytopicBarrier& barrier, const Matrix& x) {
    if (x.rows() != barrier.state_dim() || x.cols() != 1)
        throw DimensionError("eval_barrier: state " + x.shape() + " incompatible with barrier over " +
                             std::to_string(barrier.state_dim()) + " states");
    return barrier.a_cbf() * x + barrier.b_cbf();
}

[[nodiscard]] inline bool in_safe_set(const PolytopicBarrier& barrier, const Matrix& x) {
    const Matrix h = eval_barrier(barrier, x);
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] < -kBarrierSlack)
            return false;
    return true;
}

// Componentwise h_next >= gamma * h_now (up to kBarrierSlack).
[[nodiscard]] inline bool one_step_condition(const Matrix& h_next, const Matrix& h_now, double gamma) {
    if (h_next.size() != h_now.size())
        throw DimensionError("one_step_condition: length mismatch " + h_next.shape() + " vs " + h_now.shape());
    for (std::size_t i = 0; i < h_now.size(); ++i)
        if (h_next[i] < gamma * h_now[i] - kBarrierSlack)
            return false;
    return true;
}

[[nodiscard]] inline double validated_decay(double value, const char* name) {
    if (!(value > 0.0 && value < 1.0))
        throw std::invalid_argument(std::string(name) + " must lie strictly in (0,1)");
    return value;
}

// ---------------------------------------------------------------------------
// High relative degree: auxiliary chain for one affine constraint c0 x + d0.
//
//   psi_0(x)   = c0 x + d0
//   psi_j(x)   = psi_{j-1}(A x) + (lambda_j - 1) psi_{j-1}(x)      j < rho
//   psi_rho(x,u) = psi_{rho-1}(A x + B u) + (lambda_rho - 1) psi_{rho-1}(x)
//
// Below the relative degree psi_{j-1} does not see u after one step, so every
// level keeps the affine form c_j x + d_j with
//   c_j = c_{j-1} A + (lambda_j - 1) c_{j-1},   d_j = lambda_j d_{j-1}.
// Decay lambda corresponds to h(x_{k+1}) >= (1 - lambda) h(x_k) at rho = 1.
// ---------------------------------------------------------------------------
struct AffineTerm {
    Matrix c; // 1 x n
    double d = 0.0;
};

struct AffineBarrierChain {
    std::vector<AffineTerm> terms;  // psi_0 ... psi_{rho-1}
    std::vector<double> lambdas;    // lambdas[j] builds level j+1; size rho
    int rho = 1;

    [[nodiscard]] double eval(std::size_t level, const Matrix& x) const {
        const AffineTerm& t = terms.at(level);
        return (t.c * x)[0] + t.d;
    }
};

[[nodiscard]] inline AffineBarrierChain build_affine_chain(const Matrix& c0, double d0, const LtiModel& model,
                                                           const std::vector<double>& lambdas, int rho) {
    if (c0.rows() != 1 || c0.cols() != model.state_dim())
        throw DimensionError("build_affine_chain: row " + c0.shape() + " incompatible with " +
                             std::to_string(model.state_dim()) + " states");
    if (rho < 1)
        throw std::invalid_argument("build_affine_chain: rho must be positive");
    if (lambdas.size() != static_cast<std::size_t>(rho))
        throw std::invalid_argument("build_affine_chain: need one lambda per level (" + std::to_string(rho) + ")");
    for (double l : lambdas)
        (void)validated_decay(l, "lambda");

    const auto measured = relative_degree(model, c0, static_cast<int>(model.state_dim()) + rho);
    if (!measured || *measured != rho)
        throw RelativeDegreeMismatch("build_affine_chain: requested rho = " + std::to_string(rho) +
                                     " but measured relative degree is " +
                                     (measured ? std::to_string(*measured) : std::string("none")));

    AffineBarrierChain chain;
    chain.rho = rho;
    chain.lambdas = lambdas;
    chain.terms.push_back({c0, d0});
    for (int j = 1; j < rho; ++j) {
        const AffineTerm& prev = chain.terms.back();
        const double lam = lambdas[static_cast<std::size_t>(j - 1)];
        chain.terms.push_back({prev.c * model.a() + (lam - 1.0) * prev.c, lam * prev.d});
    }
    return chain;
}

[[nodiscard]] inline AffineBarrierChain build_affine_chain(const Matrix& c0, double d0, const LtiModel& model,
                                                           double lambda, int rho) {
    return build_affine_chain(c0, d0, model, std::vector<double>(static_cast<std::size_t>(std::max(rho, 0)), lambda),
                              rho);
}

// psi_rho(x, u) = row u + affine_state x + affine_const.
struct ChainConstraintRow {
    Matrix row;          // 1 x m
    Matrix affine_state; // 1 x n
    double affine_const = 0.0;
};

[[nodiscard]] inline ChainConstraintRow chain_constraint_row(const AffineBarrierChain& chain, const LtiModel& model) {
    if (chain.terms.empty() || chain.lambdas.size() != chain.terms.size())
        throw std::invalid_argument("chain_constraint_row: malformed chain");
    const AffineTerm& top = chain.terms.back();
    if (top.c.cols() != model.state_dim())
        throw DimensionError("chain_constraint_row: chain over " + std::to_string(top.c.cols()) +
                             " states, model has " + std::to_string(model.state_dim()));
    const double lam = chain.lambdas.back();
    return {top.c * model.b(), top.c * model.a() + (lam - 1.0) * top.c, lam * top.d};
}

// x in the intersection of {psi_{j,i}(x) >= 0} for every chain i and level j < rho_i.
[[nodiscard]] inline bool chain_membership(const std::vector<AffineBarrierChain>& chains, const LtiModel& model,
                                           const Matrix& x, double slack = kBarrierSlack) {
    if (x.rows() != model.state_dim() || x.cols() != 1)
        throw DimensionError("chain_membership: state " + x.shape() + " incompatible with model");
    for (const auto& chain : chains)
        for (std::size_t j = 0; j < chain.terms.size(); ++j) {
            if (chain.terms[j].c.cols() != model.state_dim())
                throw DimensionError("chain_membership: chain dimension mismatch");
            if (chain.eval(j, x) < -slack)
                return false;
        }
    return true;
}

// Stacks the top-level constraints of several chains as G u >= g(x).
struct StackedConstraint {
    Matrix g_mat;
    Matrix g_vec;
};

[[nodiscard]] inline StackedConstraint chain_input_constraints(const std::vector<AffineBarrierChain>& chains,
                                                               const LtiModel& model, const Matrix& x) {
    Matrix g_mat(chains.size(), model.input_dim());
    Matrix g_vec(chains.size(), 1);
    for (std::size_t i = 0; i < chains.size(); ++i) {
        const ChainConstraintRow row = chain_constraint_row(chains[i], model);
        g_mat.set_block(i, 0, row.row);
        g_vec(i, 0) = -((row.affine_state * x)[0] + row.affine_const);
    }
    return {std::move(g_mat), std::move(g_vec)};
}

// ---------------------------------------------------------------------------
// Predictive CBF: relative-degree-one condition on the lifted model,
//   h(A_l x + B_l v) >= gamma h(x)  <=>  A_s v >= B_s(x),
//   A_s = A_cbf B_l,   B_s(x) = A_cbf (gamma I - A_l) x - (1 - gamma) b_cbf.
// ---------------------------------------------------------------------------
class PcbfFilter {
public:
    PcbfFilter(LiftedModel lifted, PolytopicBarrier barrier, double gamma)
        : lifted_(std::move(lifted)), barrier_(std::move(barrier)), gamma_(validated_decay(gamma, "gamma")) {
        if (barrier_.state_dim() != lifted_.base().state_dim())
            throw DimensionError("PcbfFilter: barrier over " + std::to_string(barrier_.state_dim()) +
                                 " states, model has " + std::to_string(lifted_.base().state_dim()));
        const std::size_t n = lifted_.base().state_dim();
        a_s_ = barrier_.a_cbf() * lifted_.b_lift();
        b_s_state_ = barrier_.a_cbf() * (gamma_ * Matrix::identity(n) - lifted_.a_lift());
        b_s_const_ = -(1.0 - gamma_) * barrier_.b_cbf();
    }

    [[nodiscard]] const LiftedModel& lifted() const noexcept { return lifted_; }
    [[nodiscard]] const PolytopicBarrier& barrier() const noexcept { return barrier_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] const Matrix& a_s() const noexcept { return a_s_; }
    [[nodiscard]] const Matrix& b_s_state() const noexcept { return b_s_state_; }
    [[nodiscard]] const Matrix& b_s_const() const noexcept { return b_s_const_; }

private:
    LiftedModel lifted_;
    PolytopicBarrier barrier_;
    double gamma_;
    Matrix a_s_;
    Matrix b_s_state_;
    Matrix b_s_const_;
};

// Admissible inputs are {v : g v >= lo}.
struct PcbfConstraint {
    Matrix g;  // p x m
    Matrix lo; // p x 1
};

[[nodiscard]] inline PcbfConstraint assemble_pcbf(const PcbfFilter& filter, const Matrix& x) {
    if (x.rows() != filter.lifted().base().state_dim() || x.cols() != 1)
        throw DimensionError("assemble_pcbf: state " + x.shape() + " incompatible with filter");
    return {filter.a_s(), filter.b_s_state() * x + filter.b_s_const()};
}

} // namespace pcbf
