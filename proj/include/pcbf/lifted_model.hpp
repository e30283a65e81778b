#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "pcbf/matrix.hpp"

namespace pcbf {

// Discrete-time linear model x_{k+1} = A x_k + B u_k sampled every ts seconds.
class LtiModel {
public:
    LtiModel(Matrix a, Matrix b, double ts) : a_(std::move(a)), b_(std::move(b)), ts_(ts) {
        if (!a_.is_square())
            throw DimensionError("LtiModel: state matrix " + a_.shape() + " is not square");
        if (b_.rows() != a_.rows())
            throw DimensionError("LtiModel: input matrix " + b_.shape() + " incompatible with state matrix " +
                                 a_.shape());
        if (!(ts_ > 0.0) || !std::isfinite(ts_))
            throw std::invalid_argument("LtiModel: sample time must be positive and finite");
        a_.require_finite("LtiModel");
        b_.require_finite("LtiModel");
    }

    [[nodiscard]] const Matrix& a() const noexcept { return a_; }
    [[nodiscard]] const Matrix& b() const noexcept { return b_; }
    [[nodiscard]] double ts() const noexcept { return ts_; }
    [[nodiscard]] std::size_t state_dim() const noexcept { return a_.rows(); }
    [[nodiscard]] std::size_t input_dim() const noexcept { return b_.cols(); }

    [[nodiscard]] Matrix step(const Matrix& x, const Matrix& u) const { return a_ * x + b_ * u; }

private:
    Matrix a_;
    Matrix b_;
    double ts_;
};

// Double integrator with sample time ts: A = [1 ts; 0 1], B = [ts^2/2; ts] * input_gain.
[[nodiscard]] inline LtiModel double_integrator(double ts, double input_gain = 1.0) {
    return LtiModel(Matrix{{1.0, ts}, {0.0, 1.0}}, Matrix{{ts * ts / 2.0 * input_gain}, {ts * input_gain}}, ts);
}

// Model obtained by holding the input constant over `horizon` base steps:
//   x_{k+l} = A^l x_k + (sum_{i<l} A^i) B u_k.
// The effective sample time is horizon * base.ts().
class LiftedModel {
public:
    LiftedModel(LtiModel base, unsigned horizon)
        : base_(std::move(base)), horizon_(validated(horizon)), a_lift_(mat_pow(base_.a(), horizon_)),
          b_lift_(power_sum(base_.a(), horizon_) * base_.b()) {}

    [[nodiscard]] const LtiModel& base() const noexcept { return base_; }
    [[nodiscard]] unsigned horizon() const noexcept { return horizon_; }
    [[nodiscard]] const Matrix& a_lift() const noexcept { return a_lift_; }
    [[nodiscard]] const Matrix& b_lift() const noexcept { return b_lift_; }
    [[nodiscard]] double effective_ts() const noexcept { return base_.ts() * horizon_; }

    [[nodiscard]] LtiModel as_model() const { return LtiModel(a_lift_, b_lift_, effective_ts()); }

    [[nodiscard]] Matrix step(const Matrix& x, const Matrix& v) const { return a_lift_ * x + b_lift_ * v; }

private:
    static unsigned validated(unsigned horizon) {
        if (horizon < 1)
            throw std::invalid_argument("LiftedModel: horizon must be at least 1");
        return horizon;
    }

    LtiModel base_;
    unsigned horizon_;
    Matrix a_lift_;
    Matrix b_lift_;
};

[[nodiscard]] inline LiftedModel lift(const LtiModel& model, int horizon) {
    if (horizon < 1)
        throw std::invalid_argument("lift: horizon must be at least 1, got " + std::to_string(horizon));
    return LiftedModel(model, static_cast<unsigned>(horizon));
}

// Realizes u_{k-m} as state: z = [x; u_{k-1}; ...; u_{k-m}], the plant is driven
// by the oldest buffered input and the new input enters the first buffer slot.
[[nodiscard]] inline LtiModel augment_delay(const LtiModel& model, unsigned delay_steps) {
    if (delay_steps == 0)
        return model;
    const std::size_t n = model.state_dim();
    const std::size_t q = model.input_dim();
    const std::size_t nz = n + delay_steps * q;

    Matrix a(nz, nz);
    a.set_block(0, 0, model.a());
    a.set_block(0, n + (delay_steps - 1) * q, model.b());
    for (unsigned s = 1; s < delay_steps; ++s)
        a.set_block(n + s * q, n + (s - 1) * q, Matrix::identity(q));

    Matrix b(nz, q);
    b.set_block(n, 0, Matrix::identity(q));
    return LtiModel(std::move(a), std::move(b), model.ts());
}

inline constexpr double kMarkovZero = 1e-9;

// Smallest rho >= 1 with |C A^(rho-1) B| > kMarkovZero (in any input column),
// or nullopt when none exists up to max_search.
[[nodiscard]] inline std::optional<int> relative_degree(const LtiModel& model, const Matrix& c, int max_search) {
    if (c.rows() != 1 || c.cols() != model.state_dim())
        throw DimensionError("relative_degree: output row " + c.shape() + " incompatible with state dimension " +
                             std::to_string(model.state_dim()));
    if (max_search < 1)
        throw std::invalid_argument("relative_degree: max_search must be positive");
    Matrix ca = c;
    for (int rho = 1; rho <= max_search; ++rho) {
        const Matrix markov = ca * model.b();
        if (markov.max_abs() > kMarkovZero)
            return rho;
        ca = ca * model.a();
    }
    return std::nullopt;
}

} // namespace pcbf
