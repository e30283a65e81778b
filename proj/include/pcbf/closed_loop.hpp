#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcbf/barrier.hpp"
#include "pcbf/controllers.hpp"
#include "pcbf/plants.hpp"
#include "pcbf/qls_solver.hpp"

namespace pcbf {

enum class FilterStatus { inactive, projecting, infeasible_passthrough };

[[nodiscard]] inline const char* to_string(FilterStatus s) {
    switch (s) {
    case FilterStatus::inactive:
        return "inactive";
    case FilterStatus::projecting:
        return "projecting";
    case FilterStatus::infeasible_passthrough:
        return "infeasible-passthrough";
    }
    return "unknown";
}

[[nodiscard]] inline FilterStatus filter_status_from_string(const std::string& s) {
    if (s == "inactive")
        return FilterStatus::inactive;
    if (s == "projecting")
        return FilterStatus::projecting;
    if (s == "infeasible-passthrough")
        return FilterStatus::infeasible_passthrough;
    throw std::invalid_argument("unknown filter status '" + s + "'");
}

// Piecewise-linear schedule in time, held constant outside its breakpoints.
struct ReferenceProfile {
    std::vector<std::pair<double, double>> points{{0.0, 0.0}};

    [[nodiscard]] static ReferenceProfile constant(double v) { return {{{0.0, v}}}; }

    // Linear ramp from 0 at t = 0 to `final_value` at t = duration.
    [[nodiscard]] static ReferenceProfile ramp(double final_value, double duration) {
        if (!(duration > 0.0))
            throw std::invalid_argument("ReferenceProfile::ramp: duration must be positive");
        return {{{0.0, 0.0}, {duration, final_value}}};
    }

    [[nodiscard]] double value(double t) const {
        if (points.empty())
            return 0.0;
        if (t <= points.front().first)
            return points.front().second;
        for (std::size_t i = 1; i < points.size(); ++i) {
            const auto [t1, v1] = points[i];
            if (t <= t1) {
                const auto [t0, v0] = points[i - 1];
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        return points.back().second;
    }
};

// One sample of a closed-loop run. The state is the one measured at the start
// of the step; barrier values and violation flags refer to that state.
struct TraceRecord {
    int step = 0;
    double t = 0.0;
    std::vector<double> reference;
    std::vector<double> state;
    std::vector<double> u_requested;
    std::vector<double> u_applied;
    std::vector<double> actuation; // bicopter: thrust, torque
    std::vector<double> barrier;
    FilterStatus status = FilterStatus::inactive;
    std::vector<bool> violation;
    int solver_iterations = 0;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class PlantKind { double_integrator, bicopter };

[[nodiscard]] inline const char* to_string(PlantKind k) {
    return k == PlantKind::double_integrator ? "double_integrator" : "bicopter";
}

struct SimTrace {
    PlantKind plant = PlantKind::double_integrator;
    std::vector<TraceRecord> records;

    friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

[[nodiscard]] inline std::vector<bool> violation_flags(const std::vector<double>& h) {
    std::vector<bool> flags(h.size());
    for (std::size_t i = 0; i < h.size(); ++i)
        flags[i] = h[i] < -kBarrierSlack;
    return flags;
}

// PCBF constraints of one or more decoupled axes stacked into a single
// least-squares projection (block-diagonal in the inputs).
class SafetyFilter {
public:
    struct Result {
        Matrix u;
        FilterStatus status = FilterStatus::inactive;
        int iterations = 0;
    };

    SafetyFilter(std::vector<PcbfFilter> axes, QlsOptions options = {})
        : axes_(std::move(axes)), solver_(options) {
        if (axes_.empty())
            throw std::invalid_argument("SafetyFilter: at least one axis required");
    }

    [[nodiscard]] const std::vector<PcbfFilter>& axes() const noexcept { return axes_; }

    [[nodiscard]] QlsProblem problem(const std::vector<Matrix>& axis_states, const Matrix& u_requested) const {
        if (axis_states.size() != axes_.size())
            throw DimensionError("SafetyFilter: expected " + std::to_string(axes_.size()) + " axis states");
        Matrix g;
        Matrix lo;
        for (std::size_t i = 0; i < axes_.size(); ++i) {
            const PcbfConstraint c = assemble_pcbf(axes_[i], axis_states[i]);
            g = g.empty() ? c.g : block_diag(g, c.g);
            lo = vstack(lo, c.lo);
        }
        if (g.cols() != u_requested.rows())
            throw DimensionError("SafetyFilter: requested input " + u_requested.shape() + " but constraints act on " +
                                 std::to_string(g.cols()) + " inputs");
        return {u_requested, std::move(g), std::move(lo)};
    }

    // Projects u_requested onto the admissible set; infeasible problems pass
    // the request through unchanged.
    Result apply(const std::vector<Matrix>& axis_states, const Matrix& u_requested) {
        const QlsProblem qp = problem(axis_states, u_requested);
        const QlsSolution sol = solver_.solve(qp);
        switch (sol.status) {
        case QlsStatus::optimal:
            return {sol.nu, sol.active_set.empty() ? FilterStatus::inactive : FilterStatus::projecting,
                    sol.iterations};
        case QlsStatus::infeasible:
            return {u_requested, FilterStatus::infeasible_passthrough, sol.iterations};
        case QlsStatus::iteration_limit:
            break;
        }
        throw std::runtime_error("SafetyFilter: least-squares solver hit its iteration limit (" +
                                 std::to_string(sol.iterations) + ")");
    }

private:
    std::vector<PcbfFilter> axes_;
    ActiveSetQlsSolver solver_;
};

struct FilterSettings {
    bool enabled = true;
    double gamma = 0.6;
    std::vector<int> horizons{3};
    bool warm_start = false;
};

// ---------------------------------------------------------------------------
// Double integrator with unknown input delay: LQR-int -> f_cbf -> delayed plant.
// ---------------------------------------------------------------------------
struct DoubleIntegratorSetup {
    double ts = 1.0;
    unsigned delay_steps = 1;
    Matrix x0 = Matrix(2, 1);
    ReferenceProfile reference = ReferenceProfile::constant(5.0);
    PolytopicBarrier barrier = box_barrier({{-8.0, 8.0}, {-0.5, 0.5}});
    FilterSettings filter;
    Matrix gain = Matrix{{0.152, 0.542, 0.016}};
    double anti_windup = 0.2;
};

class DoubleIntegratorLoop {
public:
    explicit DoubleIntegratorLoop(DoubleIntegratorSetup setup)
        : setup_(std::move(setup)), plant_(setup_.ts, setup_.delay_steps, setup_.x0),
          controller_(setup_.gain, setup_.anti_windup, Matrix{{1.0, 0.0}}, setup_.ts) {
        if (setup_.filter.enabled) {
            if (setup_.filter.horizons.size() != 1)
                throw std::invalid_argument("DoubleIntegratorLoop: exactly one horizon expected");
            // The filter is designed on the delay-free model.
            filter_.emplace(std::vector<PcbfFilter>{PcbfFilter(lift(double_integrator(setup_.ts),
                                                                   setup_.filter.horizons[0]),
                                                              setup_.barrier, setup_.filter.gamma)},
                            QlsOptions{100, 1e-8, setup_.filter.warm_start});
        }
    }

    [[nodiscard]] const DelayedDoubleIntegrator& plant() const noexcept { return plant_; }

    TraceRecord step() {
        TraceRecord rec;
        rec.step = k_;
        rec.t = k_ * setup_.ts;
        const double r = setup_.reference.value(rec.t);
        const Matrix x = plant_.state();
        const Matrix h = eval_barrier(setup_.barrier, x);

        const double u_req = controller_.step(Matrix{{r - x[0]}, {-x[1]}});
        double u_app = u_req;
        if (filter_) {
            const auto res = filter_->apply({x}, Matrix{{u_req}});
            u_app = res.u[0];
            rec.status = res.status;
            rec.solver_iterations = res.iterations;
        }
        controller_.set_applied_input(u_app);

        rec.reference = {r};
        rec.state = {x[0], x[1]};
        rec.u_requested = {u_req};
        rec.u_applied = {u_app};
        rec.barrier = h.data();
        rec.violation = violation_flags(rec.barrier);

        plant_.step(u_app);
        ++k_;
        return rec;
    }

private:
    DoubleIntegratorSetup setup_;
    DelayedDoubleIntegrator plant_;
    LqrIntController controller_;
    std::optional<SafetyFilter> filter_;
    int k_ = 0;
};

// ---------------------------------------------------------------------------
// Bicopter cascade: outer LQR-int pair -> f_cbf -> f_map -> inner LQR-int ->
// RK4 plant over one sample with (T, tau) held.
// ---------------------------------------------------------------------------
struct BicopterGains {
    Matrix horizontal = Matrix{{0.397, 0.918, 0.032}};
    Matrix vertical = Matrix{{10.705, 6.3849, 1.392}};
    Matrix attitude = Matrix{{21.307, 4.182, 0.670}};
    double anti_windup = 0.2;
};

struct BicopterSetup {
    double ts = 0.005;
    int substeps = 10;
    BicopterParams params;
    BicopterState x0;
    ReferenceProfile reference_h = ReferenceProfile::ramp(2.0, 5.0);
    ReferenceProfile reference_v = ReferenceProfile::ramp(-1.0, 5.0);
    PolytopicBarrier barrier_h = box_barrier({{-1.5, 1.5}, {-0.3, 0.3}});
    PolytopicBarrier barrier_v = box_barrier({{-0.75, 0.75}, {-0.4, 0.4}});
    FilterSettings filter{true, 0.8, {20, 80}, false};
    BicopterGains gains;
};

class BicopterLoop {
public:
    explicit BicopterLoop(BicopterSetup setup)
        : setup_(std::move(setup)), state_(setup_.x0),
          ctrl_h_(setup_.gains.horizontal, setup_.gains.anti_windup, Matrix{{1.0, 0.0}}, setup_.ts),
          ctrl_v_(setup_.gains.vertical, setup_.gains.anti_windup, Matrix{{1.0, 0.0}}, setup_.ts),
          ctrl_att_(setup_.gains.attitude, setup_.gains.anti_windup, Matrix{{1.0, 0.0}}, setup_.ts) {
        setup_.params.validate();
        if (setup_.substeps < 1)
            throw std::invalid_argument("BicopterLoop: substeps must be at least 1");
        if (setup_.filter.enabled) {
            if (setup_.filter.horizons.size() != 2)
                throw std::invalid_argument("BicopterLoop: horizontal and vertical horizons expected");
            const LtiModel pos = bicopter_position_model(setup_.params, setup_.ts);
            filter_.emplace(
                std::vector<PcbfFilter>{
                    PcbfFilter(lift(pos, setup_.filter.horizons[0]), setup_.barrier_h, setup_.filter.gamma),
                    PcbfFilter(lift(pos, setup_.filter.horizons[1]), setup_.barrier_v, setup_.filter.gamma)},
                QlsOptions{100, 1e-8, setup_.filter.warm_start});
        }
    }

    [[nodiscard]] const BicopterState& state() const noexcept { return state_; }

    TraceRecord step() {
        TraceRecord rec;
        rec.step = k_;
        rec.t = k_ * setup_.ts;
        const double r_h = setup_.reference_h.value(rec.t);
        const double r_v = setup_.reference_v.value(rec.t);
        const Matrix x_h = state_.horizontal();
        const Matrix x_v = state_.vertical();

        const double u_req_h = ctrl_h_.step(Matrix{{r_h - x_h[0]}, {-x_h[1]}});
        const double u_req_v = ctrl_v_.step(Matrix{{r_v - x_v[0]}, {-x_v[1]}});
        double u_h = u_req_h;
        double u_v = u_req_v;
        if (filter_) {
            const auto res = filter_->apply({x_h, x_v}, Matrix{{u_req_h}, {u_req_v}});
            u_h = res.u[0];
            u_v = res.u[1];
            rec.status = res.status;
            rec.solver_iterations = res.iterations;
        }
        ctrl_h_.set_applied_input(u_h);
        ctrl_v_.set_applied_input(u_v);

        const ThrustCommand cmd = f_map(u_h, u_v, setup_.params);
        const double tau = ctrl_att_.step(Matrix{{cmd.theta_ref - state_.theta}, {-state_.omega}});

        rec.reference = {r_h, r_v};
        const auto s = state_.as_array();
        rec.state.assign(s.begin(), s.end());
        rec.u_requested = {u_req_h, u_req_v};
        rec.u_applied = {u_h, u_v};
        rec.actuation = {cmd.thrust, tau};
        rec.barrier = eval_barrier(setup_.barrier_h, x_h).data();
        const Matrix h_v = eval_barrier(setup_.barrier_v, x_v);
        rec.barrier.insert(rec.barrier.end(), h_v.data().begin(), h_v.data().end());
        rec.violation = violation_flags(rec.barrier);

        state_ = rk4_step(state_, cmd.thrust, tau, setup_.params, setup_.ts, setup_.substeps);
        ++k_;
        return rec;
    }

private:
    BicopterSetup setup_;
    BicopterState state_;
    LqrIntController ctrl_h_;
    LqrIntController ctrl_v_;
    LqrIntController ctrl_att_;
    std::optional<SafetyFilter> filter_;
    int k_ = 0;
};

} // namespace pcbf
