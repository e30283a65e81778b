#pragma once

#include <array>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>

#include "pcbf/lifted_model.hpp"
#include "pcbf/matrix.hpp"

namespace pcbf {

// x_{k+1} = A x_k + B u_{k-m} with A, B of the sampled double integrator.
// The m-step input buffer starts zero-filled.
class DelayedDoubleIntegrator {
public:
    DelayedDoubleIntegrator(double ts, unsigned delay_steps, Matrix x0 = Matrix(2, 1))
        : model_(double_integrator(ts)), delay_(delay_steps), state_(std::move(x0)),
          buffer_(delay_steps, 0.0) {
        if (state_.rows() != 2 || state_.cols() != 1)
            throw DimensionError("DelayedDoubleIntegrator: initial state must be 2x1, got " + state_.shape());
        state_.require_finite("DelayedDoubleIntegrator");
    }

    [[nodiscard]] const Matrix& state() const noexcept { return state_; }
    [[nodiscard]] unsigned delay() const noexcept { return delay_; }
    [[nodiscard]] const LtiModel& model() const noexcept { return model_; }
    [[nodiscard]] const std::deque<double>& input_buffer() const noexcept { return buffer_; }

    // Enqueues u, applies the oldest buffered input, returns the new state.
    const Matrix& step(double u) {
        double applied = u;
        if (delay_ > 0) {
            buffer_.push_back(u);
            applied = buffer_.front();
            buffer_.pop_front();
        }
        state_ = model_.a() * state_ + model_.b() * Matrix{{applied}};
        return state_;
    }

private:
    LtiModel model_;
    unsigned delay_;
    Matrix state_;
    std::deque<double> buffer_;
};

// ---------------------------------------------------------------------------
// Planar bicopter. Vertical position is positive down: gravity accelerates
// v_v positively and thrust opposes it at zero tilt.
// ---------------------------------------------------------------------------
struct BicopterParams {
    double mass = 1.0;     // kg
    double inertia = 0.02; // kg m^2
    double arm = 0.5;      // m, rotor separation
    double gravity = 9.81; // m/s^2

    void validate() const {
        if (!(mass > 0.0) || !(inertia > 0.0) || !(arm > 0.0) || !(gravity > 0.0) || !std::isfinite(mass) ||
            !std::isfinite(inertia) || !std::isfinite(arm) || !std::isfinite(gravity))
            throw std::invalid_argument("BicopterParams: mass, inertia, arm and gravity must be positive");
    }

    [[nodiscard]] double hover_thrust() const noexcept { return mass * gravity; }
};

struct BicopterState {
    double p_h = 0.0;
    double v_h = 0.0;
    double p_v = 0.0;
    double v_v = 0.0;
    double theta = 0.0;
    double omega = 0.0;

    [[nodiscard]] std::array<double, 6> as_array() const { return {p_h, v_h, p_v, v_v, theta, omega}; }

    [[nodiscard]] static BicopterState from_array(const std::array<double, 6>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }

    [[nodiscard]] bool all_finite() const {
        for (double v : as_array())
            if (!std::isfinite(v))
                return false;
        return true;
    }

    [[nodiscard]] Matrix horizontal() const { return Matrix{{p_h}, {v_h}}; }
    [[nodiscard]] Matrix vertical() const { return Matrix{{p_v}, {v_v}}; }
    [[nodiscard]] Matrix attitude() const { return Matrix{{theta}, {omega}}; }

    friend bool operator==(const BicopterState&, const BicopterState&) = default;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] inline BicopterState bicopter_deriv(const BicopterState& s, double thrust, double torque,
                                                  const BicopterParams& p) {
    return {
        s.v_h,
        thrust / p.mass * std::sin(s.theta),
        s.v_v,
        -thrust / p.mass * std::cos(s.theta) + p.gravity,
        s.omega,
        torque / p.inertia,
    };
}

namespace detail {

[[nodiscard]] inline BicopterState axpy(const BicopterState& s, double h, const BicopterState& d) {
    return {s.p_h + h * d.p_h, s.v_h + h * d.v_h, s.p_v + h * d.p_v,
            s.v_v + h * d.v_v, s.theta + h * d.theta, s.omega + h * d.omega};
}

} // namespace detail

// Classical RK4 over dt with (thrust, torque) held constant (zero-order hold).
[[nodiscard]] inline BicopterState rk4_step(BicopterState s, double thrust, double torque, const BicopterParams& p,
                                           double dt, int substeps) {
    if (!(dt > 0.0) || substeps < 1)
        throw std::invalid_argument("rk4_step: dt must be positive and substeps at least 1");
    const double h = dt / substeps;
    for (int i = 0; i < substeps; ++i) {
        const BicopterState k1 = bicopter_deriv(s, thrust, torque, p);
        const BicopterState k2 = bicopter_deriv(detail::axpy(s, h / 2, k1), thrust, torque, p);
        const BicopterState k3 = bicopter_deriv(detail::axpy(s, h / 2, k2), thrust, torque, p);
        const BicopterState k4 = bicopter_deriv(detail::axpy(s, h, k3), thrust, torque, p);
        s = {
            s.p_h + h / 6 * (k1.p_h + 2 * k2.p_h + 2 * k3.p_h + k4.p_h),
            s.v_h + h / 6 * (k1.v_h + 2 * k2.v_h + 2 * k3.v_h + k4.v_h),
            s.p_v + h / 6 * (k1.p_v + 2 * k2.p_v + 2 * k3.p_v + k4.p_v),
            s.v_v + h / 6 * (k1.v_v + 2 * k2.v_v + 2 * k3.v_v + k4.v_v),
            s.theta + h / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta),
            s.omega + h / 6 * (k1.omega + 2 * k2.omega + 2 * k3.omega + k4.omega),
        };
        if (!s.all_finite())
            throw DivergenceError("rk4_step: state became non-finite at substep " + std::to_string(i));
    }
    return s;
}

struct ThrustCommand {
    double thrust = 0.0;    // N
    double theta_ref = 0.0; // rad
};

// Maps horizontal/vertical force commands to total thrust and reference tilt:
// T = sqrt(u_h^2 + (m g - u_v)^2), theta_r = atan2(u_h, m g - u_v), with
// atan2(0, 0) taken as 0.
[[nodiscard]] inline ThrustCommand f_map(double u_h, double u_v, const BicopterParams& p) {
    const double vertical = p.hover_thrust() - u_v;
    const double thrust = std::hypot(u_h, vertical);
    const double theta = (u_h == 0.0 && vertical == 0.0) ? 0.0 : std::atan2(u_h, vertical);
    return {thrust, theta};
}

// Decoupled sampled models used to design the outer and inner loops:
// translational axes driven by force commands, attitude by torque.
[[nodiscard]] inline LtiModel bicopter_position_model(const BicopterParams& p, double ts) {
    return double_integrator(ts, 1.0 / p.mass);
}

[[nodiscard]] inline LtiModel bicopter_attitude_model(const BicopterParams& p, double ts) {
    return double_integrator(ts, 1.0 / p.inertia);
}

} // namespace pcbf
