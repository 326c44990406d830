#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "micropump/errors.hpp"
#include "micropump/hydraulics.hpp"
#include "micropump/pump_dynamics.hpp"

using namespace micropump;

TEST(HeadLoss, BernoulliBalance) {
    const auto r = total_head_loss(0.3, 1.0, 9.81);
    EXPECT_NEAR(r.head, 0.3 - 1.0 / (2.0 * 9.81), 1e-15);
    EXPECT_NEAR(r.head, 0.24903, 5e-6);
    EXPECT_FALSE(r.negative_loss);
    EXPECT_EQ(total_head_loss(0.3, 0.0, 9.81).head, 0.3);
    EXPECT_EQ(total_head_loss(0.0, 0.0, 9.81).head, 0.0);
}

TEST(HeadLoss, NegativeLossIsFlaggedNotThrown) {
    const auto r = total_head_loss(0.01, 2.0, 9.81);
    EXPECT_LT(r.head, 0.0);
    EXPECT_TRUE(r.negative_loss);
    EXPECT_THROW(total_head_loss(0.3, 1.0, 0.0), InvalidSpec);
}

TEST(Decompose, SubtractsComponentLosses) {
    EXPECT_NEAR(decompose_pump_resistance(0.30, 0.05, 0.03), 0.22, 1e-15);
    EXPECT_EQ(decompose_pump_resistance(0.4, 0.0, 0.0), 0.4);
    EXPECT_THROW(decompose_pump_resistance(0.05, 0.05, 0.03), InvalidSpec);
    EXPECT_THROW(decompose_pump_resistance(0.3, -0.01, 0.0), InvalidSpec);
}

TEST(Decompose, InverseOfSumming) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.2);
    for (int i = 0; i < 100; ++i) {
        const double pump = u(rng), plate = u(rng), pipe = u(rng);
        EXPECT_NEAR(decompose_pump_resistance(pump + plate + pipe, plate, pipe), pump, 1e-15);
    }
}

TEST(LinearLoss, ExactLineRecovered) {
    const std::vector<HeadLossSample> s{{0.1, 0.04}, {0.2, 0.08}, {0.3, 0.12}};
    const auto fit = fit_linear_loss(s);
    EXPECT_NEAR(fit.coefficient, 0.4, 1e-14);
    EXPECT_NEAR(fit.rms_residual, 0.0, 1e-15);
}

TEST(LinearLoss, NoisyLineWithinTwoPercent) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<HeadLossSample> s;
    for (int i = 1; i <= 20; ++i) {
        const double v = 0.05 * i;
        s.push_back({v, 0.4 * v * (1.0 + noise(rng))});
    }
    EXPECT_NEAR(fit_linear_loss(s).coefficient, 0.4, 0.4 * 0.02);
}

TEST(LinearLoss, DegenerateSamplesRejected) {
    EXPECT_THROW(fit_linear_loss(std::vector<HeadLossSample>{{0.2, 0.1}}), InvalidSpec);
    EXPECT_THROW(fit_linear_loss(std::vector<HeadLossSample>{{0.2, 0.1}, {0.2, 0.2}}), InvalidSpec);
}

TEST(PumpCurve, LinearBetweenQuotedEndpoints) {
    const auto pump = PumpCurve::from_ml_per_min(0.52, 72.0);
    EXPECT_NEAR(to_ml_per_min(pump.flow_at(0.26)), 36.0, 36.0 * 1e-12);
    EXPECT_NEAR(to_ml_per_min(pump.flow_at(0.0)), 72.0, 72.0 * 1e-12);
    EXPECT_EQ(pump.flow_at(0.52), 0.0);
    EXPECT_NEAR(pump.head_at(pump.max_flow() / 2.0), 0.26, 1e-15);
    EXPECT_THROW(pump.flow_at(0.6), InvalidSpec);
    EXPECT_THROW(PumpCurve(0.0, 1e-6), InvalidSpec);
}

TEST(OperatingPoint, HandSolvedExample) {
    const auto pump = PumpCurve::from_ml_per_min(0.52, 72.0);
    // a = 0.002 m per (ml/min): 0.52 (1 - Q/72) = 0.002 Q.
    const SystemCurve system{0.002 * kMlPerMinPerM3PerS, 0.0, 0.0};
    const auto op = operating_point(pump, system);
    const double q_hand = 0.52 / (0.002 + 0.52 / 72.0);
    EXPECT_NEAR(to_ml_per_min(op.flow), q_hand, q_hand * 1e-12);
    EXPECT_NEAR(to_ml_per_min(op.flow), 56.39, 0.005);
    EXPECT_NEAR(op.head, 0.1128, 0.00005);
}

TEST(OperatingPoint, Limits) {
    const auto pump = PumpCurve::from_ml_per_min(0.52, 72.0);
    const auto free = operating_point(pump, SystemCurve{});
    EXPECT_NEAR(free.flow, pump.max_flow(), pump.max_flow() * 1e-15);
    EXPECT_EQ(free.head, 0.0);
    const auto dead = operating_point(pump, SystemCurve{1e20, 0.0, 0.0});
    EXPECT_LT(to_ml_per_min(dead.flow), 1e-6);
    EXPECT_NEAR(dead.head, 0.52, 1e-9);
    EXPECT_THROW(operating_point(pump, SystemCurve{-1.0, 0.0, 0.0}), InvalidSpec);
}

TEST(OperatingPoint, SatisfiesBothCurvesOnRandomSystems) {
    const auto pump = PumpCurve::from_ml_per_min(0.52, 72.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> exponent(-5.0, -1.0);
    for (int i = 0; i < 100; ++i) {
        const double a = std::pow(10.0, exponent(rng)) * kMlPerMinPerM3PerS;
        const SystemCurve system{a * 0.5, a * 0.3, a * 0.2};
        const auto op = operating_point(pump, system);
        EXPECT_NEAR(op.head, pump.shutoff_head() * (1.0 - op.flow / pump.max_flow()), 1e-9 * op.head);
        EXPECT_NEAR(op.head, system.total() * op.flow, 1e-9 * op.head);
        EXPECT_GE(op.flow, 0.0);
        EXPECT_LE(op.flow, pump.max_flow());
    }
}

TEST(SystemCurve, VelocityCoefficientsConvertThroughArea) {
    const double area = 3e-6;
    const auto s = SystemCurve::from_velocity_coefficients(0.4, 0.2, 0.1, area);
    EXPECT_NEAR(s.total(), 0.7 / area, 1e-9);
    EXPECT_NEAR(s.head_at(velocity_to_flow(0.5, area)), 0.35, 1e-12);
    EXPECT_NEAR(flow_to_velocity(velocity_to_flow(0.5, area), area), 0.5, 1e-15);
    EXPECT_THROW(SystemCurve::from_velocity_coefficients(0.4, 0.2, 0.1, 0.0), InvalidSpec);
}
