#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pcbf/plants.hpp"
#include "support.hpp"

using pcbf::BicopterParams;
using pcbf::BicopterState;
using pcbf::Matrix;
using pcbf::test::Gen;

namespace {

double state_gap(const BicopterState& a, const BicopterState& b) {
    const auto x = a.as_array();
    const auto y = b.as_array();
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        d = std::max(d, std::abs(x[i] - y[i]));
    return d;
}

} // namespace

TEST(DelayedDoubleIntegrator, NoDelayStep) {
    pcbf::DelayedDoubleIntegrator p(1.0, 0);
    EXPECT_EQ(p.step(1.0), (Matrix{{0.5}, {1.0}}));
}

TEST(DelayedDoubleIntegrator, OneStepDelayTrace) {
    pcbf::DelayedDoubleIntegrator p(1.0, 1);
    EXPECT_EQ(p.input_buffer().size(), 1u);
    EXPECT_EQ(p.step(1.0), Matrix(2, 1));
    EXPECT_EQ(p.step(0.0), (Matrix{{0.5}, {1.0}}));
    EXPECT_EQ(p.input_buffer().size(), 1u);
}

TEST(DelayedDoubleIntegrator, RestIsEquilibrium) {
    pcbf::DelayedDoubleIntegrator p(0.3, 2);
    for (int k = 0; k < 20; ++k)
        EXPECT_EQ(p.step(0.0), Matrix(2, 1));
}

TEST(DelayedDoubleIntegrator, MatchesAugmentedStateSpace) {
    Gen g(50);
    for (unsigned m = 0; m <= 3; ++m) {
        const double ts = g.uniform(0.1, 1.0);
        pcbf::DelayedDoubleIntegrator plant(ts, m);
        const auto aug = pcbf::augment_delay(pcbf::double_integrator(ts), m);
        Matrix z(2 + m, 1);
        for (int k = 0; k < 200; ++k) {
            const double u = g.uniform(-1, 1);
            const Matrix& x = plant.step(u);
            z = aug.step(z, Matrix{{u}});
            ASSERT_LE(pcbf::test::max_diff(x, z.block(0, 0, 2, 1)), 1e-12) << "m=" << m << " k=" << k;
        }
    }
}

TEST(BicopterParams, Validation) {
    BicopterParams p;
    EXPECT_NO_THROW(p.validate());
    p.inertia = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(BicopterDeriv, HoverIsEquilibrium) {
    const BicopterParams p;
    const BicopterState s{1.0, 0.2, -0.5, 0.1, 0.0, 0.0};
    const auto d = pcbf::bicopter_deriv(s, p.hover_thrust(), 0.0, p);
    EXPECT_EQ(d.p_h, s.v_h);
    EXPECT_EQ(d.p_v, s.v_v);
    EXPECT_EQ(d.v_h, 0.0);
    EXPECT_NEAR(d.v_v, 0.0, 1e-15);
    EXPECT_EQ(d.theta, 0.0);
    EXPECT_EQ(d.omega, 0.0);
}

TEST(BicopterDeriv, SidewaysThrustAndTorque) {
    const BicopterParams p;
    const auto d = pcbf::bicopter_deriv({0, 0, 0, 0, std::numbers::pi / 2, 0}, p.hover_thrust(), 0.0, p);
    EXPECT_NEAR(d.v_h, p.gravity, 1e-12);
    EXPECT_NEAR(d.v_v, p.gravity, 1e-12);
    EXPECT_DOUBLE_EQ(pcbf::bicopter_deriv({}, 0.0, p.inertia, p).omega, 1.0);
}

TEST(Rk4, HoverIsPreserved) {
    const BicopterParams p;
    const BicopterState s{0.3, 0.0, -0.2, 0.0, 0.0, 0.0};
    for (double dt : {0.001, 0.005, 0.1})
        EXPECT_LE(state_gap(pcbf::rk4_step(s, p.hover_thrust(), 0.0, p, dt, 10), s), 1e-12);
}

TEST(Rk4, PureRotationIsQuadraticInTime) {
    const BicopterParams p;
    const double tau = 0.01;
    const auto s = pcbf::rk4_step({}, p.hover_thrust(), tau, p, 0.1, 20);
    EXPECT_NEAR(s.theta, 0.5 * tau / p.inertia * 0.01, 1e-8);
    EXPECT_NEAR(s.omega, tau / p.inertia * 0.1, 1e-8);
}

TEST(Rk4, FourthOrderConvergence) {
    const BicopterParams p;
    const BicopterState s0{0.0, 0.5, 0.0, -0.3, 0.2, 1.0};
    const double thrust = 12.0;
    const double tau = 0.05;
    const double dt = 0.5;
    const auto ref = pcbf::rk4_step(s0, thrust, tau, p, dt, 2048);
    const double e1 = state_gap(pcbf::rk4_step(s0, thrust, tau, p, dt, 8), ref);
    const double e2 = state_gap(pcbf::rk4_step(s0, thrust, tau, p, dt, 16), ref);
    EXPECT_NEAR(e1 / e2, 16.0, 1.5);
}

TEST(Rk4, Errors) {
    const BicopterParams p;
    EXPECT_THROW((void)pcbf::rk4_step({}, 1.0, 0.0, p, 0.0, 1), std::invalid_argument);
    EXPECT_THROW((void)pcbf::rk4_step({}, 1.0, 0.0, p, 0.1, 0), std::invalid_argument);
    EXPECT_THROW((void)pcbf::rk4_step({}, 1.0, 1e308, p, 1.0, 1), pcbf::DivergenceError);
}

TEST(Rk4, FreeFallUnderZeroInputs) {
    const BicopterParams p;
    const BicopterState s0{0.0, 0.7, 0.0, -1.0, 0.3, 0.0};
    BicopterState s = s0;
    for (int k = 0; k < 200; ++k)
        s = pcbf::rk4_step(s, 0.0, 0.0, p, 0.005, 10);
    EXPECT_NEAR(s.v_h, s0.v_h, 1e-12);
    EXPECT_NEAR(s.v_v, s0.v_v + p.gravity * 1.0, 1e-10);
    EXPECT_NEAR(s.p_h, 0.7, 1e-12);
    EXPECT_NEAR(s.p_v, -1.0 + 0.5 * p.gravity, 1e-10);
}

TEST(FMap, Examples) {
    const BicopterParams p;
    const double mg = p.hover_thrust();
    auto c = pcbf::f_map(0.0, 0.0, p);
    EXPECT_DOUBLE_EQ(c.thrust, mg);
    EXPECT_EQ(c.theta_ref, 0.0);
    c = pcbf::f_map(mg, 0.0, p);
    EXPECT_NEAR(c.thrust, mg * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(c.theta_ref, std::numbers::pi / 4, 1e-15);
    c = pcbf::f_map(0.0, mg, p);
    EXPECT_EQ(c.thrust, 0.0);
    EXPECT_EQ(c.theta_ref, 0.0);
}

TEST(FMap, RealizesRequestedForcesAtReferenceTilt) {
    Gen g(51);
    const BicopterParams p;
    for (int trial = 0; trial < 100; ++trial) {
        const double uh = g.uniform(-5, 5);
        const double uv = g.uniform(-5, 5);
        const auto c = pcbf::f_map(uh, uv, p);
        const auto d = pcbf::bicopter_deriv({0, 0, 0, 0, c.theta_ref, 0}, c.thrust, 0.0, p);
        EXPECT_NEAR(d.v_h, uh / p.mass, 1e-12);
        EXPECT_NEAR(d.v_v, uv / p.mass, 1e-12);
    }
}

// The decoupled position model is the hover linearization: with thrust
// mg + eps*a and tilt eps*b held over each sample, the nonlinear state and
// the linear prediction (u_h = mg*theta, u_v = -dT) differ by O(eps^2).
TEST(BicopterLinearization, DiscrepancyIsSecondOrder) {
    const BicopterParams p;
    const double ts = 0.005;
    const auto pos = pcbf::bicopter_position_model(p, ts);
    Gen g(52);
    std::vector<std::pair<double, double>> profile;
    for (int k = 0; k < 100; ++k)
        profile.emplace_back(g.uniform(-1, 1), g.uniform(-1, 1));

    auto discrepancy = [&](double eps) {
        BicopterState s;
        Matrix xh(2, 1);
        Matrix xv(2, 1);
        double worst = 0.0;
        for (const auto& [a, b] : profile) {
            const double d_thrust = eps * a;
            const double theta = eps * b;
            s.theta = theta;
            s.omega = 0.0;
            s = pcbf::rk4_step(s, p.hover_thrust() + d_thrust, 0.0, p, ts, 10);
            xh = pos.step(xh, Matrix{{p.hover_thrust() * theta}});
            xv = pos.step(xv, Matrix{{-d_thrust}});
            worst = std::max({worst, std::abs(s.p_h - xh[0]), std::abs(s.v_h - xh[1]), std::abs(s.p_v - xv[0]),
                              std::abs(s.v_v - xv[1])});
        }
        return worst;
    };
    const double d1 = discrepancy(1e-2);
    const double d2 = discrepancy(5e-3);
    EXPECT_GT(d1, 0.0);
    EXPECT_NEAR(d1 / d2, 4.0, 0.4);
}

TEST(BicopterModels, DesignModelsUseMassAndInertia) {
    BicopterParams p;
    p.mass = 2.0;
    p.inertia = 0.05;
    const Matrix b = pcbf::bicopter_position_model(p, 0.1).b();
    EXPECT_NEAR(b[0], 0.005 / 2.0, 1e-15);
    EXPECT_NEAR(b[1], 0.1 / 2.0, 1e-15);
    EXPECT_NEAR(pcbf::bicopter_attitude_model(p, 0.1).b()[1], 0.1 / 0.05, 1e-15);
}
