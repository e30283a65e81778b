#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "pcbf/lifted_model.hpp"
#include "pcbf/matrix.hpp"

namespace pcbf {

// Discrete-time LQR with an integrator state and integrator anti-windup.
//
//   e_dt  = (e_k - e_{k-1}) / Ts
//   e_aug = [e_dt; C_int e_k]
//   u_lqr = K e_aug
//   u_int = u_lqr + eta_aw (u_{k-1} - e_int_{k-1})
//   e_int = e_int_{k-1} + Ts u_int
//   u_nom = e_int
//
// u_{k-1} is whatever was actually applied; callers that post-process the
// nominal input report it back through set_applied_input().
class LqrIntController {
public:
    struct State {
        Matrix e_prev;
        double u_prev = 0.0;
        double e_int_prev = 0.0;
    };

    LqrIntController(Matrix k_lqr, double eta_aw, Matrix c_int, double ts)
        : k_lqr_(std::move(k_lqr)), eta_aw_(eta_aw), c_int_(std::move(c_int)), ts_(ts) {
        if (c_int_.rows() != 1 || c_int_.cols() == 0)
            throw DimensionError("LqrIntController: C_int must be a single row, got " + c_int_.shape());
        if (k_lqr_.rows() != 1 || k_lqr_.cols() != c_int_.cols() + 1)
            throw DimensionError("LqrIntController: gain " + k_lqr_.shape() + " must be 1x" +
                                 std::to_string(c_int_.cols() + 1));
        if (!(ts_ > 0.0) || !std::isfinite(ts_))
            throw std::invalid_argument("LqrIntController: sample time must be positive");
        if (!(eta_aw_ >= 0.0) || !std::isfinite(eta_aw_))
            throw std::invalid_argument("LqrIntController: anti-windup gain must be nonnegative");
        k_lqr_.require_finite("LqrIntController");
        c_int_.require_finite("LqrIntController");
        state_.e_prev = Matrix(c_int_.cols(), 1);
    }

    [[nodiscard]] std::size_t error_dim() const noexcept { return c_int_.cols(); }
    [[nodiscard]] const Matrix& gain() const noexcept { return k_lqr_; }
    [[nodiscard]] double anti_windup() const noexcept { return eta_aw_; }
    [[nodiscard]] double ts() const noexcept { return ts_; }
    [[nodiscard]] const State& state() const noexcept { return state_; }

    void set_state(State s) {
        if (s.e_prev.rows() != error_dim() || s.e_prev.cols() != 1)
            throw DimensionError("LqrIntController: previous error " + s.e_prev.shape() + " has wrong shape");
        state_ = std::move(s);
    }

    // Computes u_nom for error e and advances e_prev and e_int. The stored
    // previous input defaults to u_nom until set_applied_input() overrides it.
    double step(const Matrix& e) {
        if (e.rows() != error_dim() || e.cols() != 1)
            throw DimensionError("LqrIntController::step: error " + e.shape() + " expected " +
                                 std::to_string(error_dim()) + "x1");
        const std::size_t n = error_dim();
        Matrix e_aug(n + 1, 1);
        for (std::size_t i = 0; i < n; ++i)
            e_aug(i, 0) = (e[i] - state_.e_prev[i]) / ts_;
        e_aug(n, 0) = (c_int_ * e)[0];

        const double u_lqr = (k_lqr_ * e_aug)[0];
        const double u_int = u_lqr + eta_aw_ * (state_.u_prev - state_.e_int_prev);
        const double e_int = state_.e_int_prev + ts_ * u_int;

        state_.e_prev = e;
        state_.e_int_prev = e_int;
        state_.u_prev = e_int;
        return e_int;
    }

    void set_applied_input(double u) { state_.u_prev = u; }

private:
    Matrix k_lqr_;
    double eta_aw_;
    Matrix c_int_;
    double ts_;
    State state_;
};

// Free-function form of one controller update.
struct LqrIntStep {
    double u_nom = 0.0;
    LqrIntController::State state;
};

[[nodiscard]] inline LqrIntStep lqr_int_step(const LqrIntController& ctrl, const Matrix& e) {
    LqrIntController copy = ctrl;
    const double u = copy.step(e);
    return {u, copy.state()};
}

class RiccatiError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DareSolution {
    Matrix p;
    Matrix k;
    int iterations = 0;
};

namespace detail {

// True when the symmetric part of m admits a Cholesky factorization.
[[nodiscard]] inline bool positive_definite(const Matrix& m) {
    const std::size_t n = m.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = 0.5 * (m(j, j) + m(j, j));
        for (std::size_t k = 0; k < j; ++k)
            d -= l(j, k) * l(j, k);
        if (!(d > 0.0))
            return false;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = 0.5 * (m(i, j) + m(j, i));
            for (std::size_t k = 0; k < j; ++k)
                s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return true;
}

} // namespace detail

// One application of the Riccati map Q + A'PA - A'PB (R + B'PB)^-1 B'PA.
[[nodiscard]] inline Matrix riccati_map(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                                        const Matrix& p) {
    const Matrix at = a.transpose();
    const Matrix bt = b.transpose();
    const Matrix s = r + bt * p * b;
    if (!detail::positive_definite(s))
        throw RiccatiError("riccati_map: R + B'PB is not positive definite");
    const Matrix gain = solve(s, bt * p * a);
    Matrix next = q + at * p * a - at * p * b * gain;
    // Keep the iterate exactly symmetric.
    for (std::size_t i = 0; i < next.rows(); ++i)
        for (std::size_t j = i + 1; j < next.cols(); ++j) {
            const double avg = 0.5 * (next(i, j) + next(j, i));
            next(i, j) = avg;
            next(j, i) = avg;
        }
    return next;
}

// Discrete algebraic Riccati equation by fixed-point iteration from P = Q,
// stopping when max|P_{k+1} - P_k| < tol * max(1, max|P_{k+1}|). Returns P and the state-feedback gain K = (R + B'PB)^-1 B'PA for u = -K x.
[[nodiscard]] inline DareSolution dare_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                                            double tol = 1e-12, int max_iter = 100000) {
    if (!a.is_square() || b.rows() != a.rows() || q.rows() != a.rows() || !q.is_square() || !r.is_square() ||
        r.rows() != b.cols())
        throw DimensionError("dare_gain: incompatible shapes A " + a.shape() + ", B " + b.shape() + ", Q " +
                             q.shape() + ", R " + r.shape());
    if (!detail::positive_definite(r))
        throw RiccatiError("dare_gain: R must be positive definite");

    Matrix p = q;
    for (int it = 1; it <= max_iter; ++it) {
        Matrix next = riccati_map(a, b, q, r, p);
        const double change = (next - p).max_abs();
        p = std::move(next);
        if (change < tol * std::max(1.0, p.max_abs())) {
            const Matrix s = r + b.transpose() * p * b;
            return {p, solve(s, b.transpose() * p * a), it};
        }
    }
    throw RiccatiError("dare_gain: Riccati iteration did not converge in " + std::to_string(max_iter) +
                       " iterations");
}

// Design model behind LqrIntController: w = [x; z] with z_{k+1} = z_k - Ts C x_k
// (the running integral of the regulation error e = -x before the current
// sample). The controller gain [K_x, K_i] acts on this model as the state
// feedback u = -K_aug w with K_aug = [K_x + Ts K_i C, -K_i].
[[nodiscard]] inline LtiModel lqr_int_design_model(const LtiModel& model, const Matrix& c_int) {
    const std::size_t n = model.state_dim();
    if (c_int.rows() != 1 || c_int.cols() != n)
        throw DimensionError("lqr_int_design_model: C_int " + c_int.shape() + " incompatible with model");
    Matrix a(n + 1, n + 1);
    a.set_block(0, 0, model.a());
    a.set_block(n, 0, -model.ts() * c_int);
    a(n, n) = 1.0;
    Matrix b(n + 1, model.input_dim());
    b.set_block(0, 0, model.b());
    return LtiModel(std::move(a), std::move(b), model.ts());
}

[[nodiscard]] inline Matrix lqr_int_gain_to_state_feedback(const Matrix& k_lqr, const Matrix& c_int, double ts) {
    const std::size_t n = c_int.cols();
    if (k_lqr.rows() != 1 || k_lqr.cols() != n + 1)
        throw DimensionError("lqr_int_gain_to_state_feedback: gain " + k_lqr.shape());
    const double k_i = k_lqr(0, n);
    Matrix k_aug(1, n + 1);
    for (std::size_t j = 0; j < n; ++j)
        k_aug(0, j) = k_lqr(0, j) + ts * k_i * c_int(0, j);
    k_aug(0, n) = -k_i;
    return k_aug;
}

[[nodiscard]] inline Matrix state_feedback_to_lqr_int_gain(const Matrix& k_aug, const Matrix& c_int, double ts) {
    const std::size_t n = c_int.cols();
    if (k_aug.rows() != 1 || k_aug.cols() != n + 1)
        throw DimensionError("state_feedback_to_lqr_int_gain: gain " + k_aug.shape());
    const double k_i = -k_aug(0, n);
    Matrix k_lqr(1, n + 1);
    for (std::size_t j = 0; j < n; ++j)
        k_lqr(0, j) = k_aug(0, j) - ts * k_i * c_int(0, j);
    k_lqr(0, n) = k_i;
    return k_lqr;
}

// Riccati synthesis of an LqrIntController gain for a single-input model.
[[nodiscard]] inline Matrix synthesize_lqr_int_gain(const LtiModel& model, const Matrix& c_int, const Matrix& q,
                                                    const Matrix& r) {
    if (model.input_dim() != 1)
        throw DimensionError("synthesize_lqr_int_gain: single-input models only");
    const LtiModel design = lqr_int_design_model(model, c_int);
    const DareSolution dare = dare_gain(design.a(), design.b(), q, r);
    return state_feedback_to_lqr_int_gain(dare.k, c_int, model.ts());
}

} // namespace pcbf
