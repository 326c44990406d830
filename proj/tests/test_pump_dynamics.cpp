#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "micropump/errors.hpp"
#include "micropump/performance.hpp"
#include "micropump/pump_dynamics.hpp"
#include "micropump/valve_mechanics.hpp"

using namespace micropump;

namespace {

constexpr double kPi = std::numbers::pi;

PumpConfig oscillator_config(double zeta, double ratio) {
    PumpConfig cfg = PumpConfig::defaults();
    const auto spec = ValveSpec::preset(ValveShape::Standard);
    cfg.inlet_valve.spec = spec;
    cfg.outlet_valve.spec = spec;
    cfg.inlet_valve.damping_coefficient = damping_for_factor(spec, zeta);
    cfg.outlet_valve.damping_coefficient = cfg.inlet_valve.damping_coefficient;
    const auto p = derive_lumped_params(spec, cfg.outlet_valve.damping_coefficient);
    cfg.drive.frequency = ratio * p.natural_frequency / (2.0 * kPi);
    return cfg;
}

SimOptions contact_free() {
    SimOptions o;
    o.seat_contact = false;
    o.convergence_tol = 1e-11;
    o.max_cycles = 4000;
    return o;
}

SimResult synthetic(std::vector<double> q_out) {
    SimResult r;
    r.q_out = std::move(q_out);
    r.y_out.assign(r.q_out.size(), 0.0);
    return r;
}

}  // namespace

TEST(Simulate, ZeroVoltageGivesZeroEverything) {
    PumpConfig cfg = PumpConfig::defaults();
    cfg.drive.voltage_amplitude = 0.0;
    for (auto mode : {ForcingMode::Prescribed, ForcingMode::PressureCoupled}) {
        cfg.forcing_mode = mode;
        const auto r = simulate(cfg);
        EXPECT_EQ(r.net_flow_rate, 0.0);
        for (const auto* v : {&r.y_in, &r.y_out, &r.chamber_pressure, &r.q_in, &r.q_out}) {
            EXPECT_TRUE(std::all_of(v->begin(), v->end(), [](double x) { return x == 0.0; }));
        }
    }
}

TEST(Simulate, ContactFreeResponseMatchesClosedForm) {
    for (double zeta : {0.1, 0.5, 2.0}) {
        for (double ratio : {0.5, 1.0, 2.0}) {
            const auto cfg = oscillator_config(zeta, ratio);
            const auto r = simulate(cfg, contact_free());
            ASSERT_TRUE(r.converged);
            const auto p = derive_lumped_params(cfg.outlet_valve.spec, cfg.outlet_valve.damping_coefficient);
            const double w = cfg.drive.omega();
            const double amp = steady_state_amplitude(p, cfg.drive.force_amplitude(), w);
            const double phase = steady_state_phase(p, w);
            EXPECT_NEAR(r.outlet_amplitude, amp, amp * 1e-6) << zeta << " " << ratio;
            EXPECT_NEAR(r.outlet_phase_lag, phase, phase * 1e-6) << zeta << " " << ratio;
            // The inlet sees the mirrored force, so it lags its own forcing equally.
            EXPECT_NEAR(r.inlet_amplitude, amp, amp * 1e-6);
            EXPECT_NEAR(r.inlet_phase_lag, phase, phase * 1e-6);
        }
    }
}

TEST(Simulate, PeakDisplacementMatchesAmplitudeAfterTransient) {
    const auto cfg = oscillator_config(0.5, 1.3);
    const auto r = simulate(cfg, contact_free());
    const auto p = derive_lumped_params(cfg.outlet_valve.spec, cfg.outlet_valve.damping_coefficient);
    // The free response decays as exp(-zeta w_n t); it must be far below the tolerance.
    const double elapsed = (r.cycles - 1) * cfg.drive.period();
    ASSERT_LT(std::exp(-p.damping_factor * p.natural_frequency * elapsed), 1e-12) << r.cycles << " cycles";
    const double amp = steady_state_amplitude(p, cfg.drive.force_amplitude(), cfg.drive.omega());
    const double peak = *std::max_element(r.y_out.begin(), r.y_out.end());
    // Sampled peak of a sinusoid on a 2000-point grid sits within 1.3e-6 of the true crest.
    EXPECT_NEAR(peak, amp, amp * 2e-6);
}

TEST(Simulate, DoublingVoltageDoublesContactFreeAmplitude) {
    auto cfg = oscillator_config(0.5, 0.8);
    const auto a = simulate(cfg, contact_free());
    cfg.drive.voltage_amplitude *= 2.0;
    const auto b = simulate(cfg, contact_free());
    EXPECT_NEAR(b.outlet_amplitude / a.outlet_amplitude, 2.0, 1e-9);
}

TEST(Simulate, ValvesNeverPenetrateTheSeat) {
    for (auto mode : {ForcingMode::Prescribed, ForcingMode::PressureCoupled}) {
        for (double f : {70.0, 110.0, 150.0, 180.0}) {
            PumpConfig cfg = PumpConfig::defaults();
            cfg.forcing_mode = mode;
            cfg.drive.frequency = f;
            const auto r = simulate(cfg);
            EXPECT_GE(r.min_opening, 0.0);
            EXPECT_GE(*std::min_element(r.y_in.begin(), r.y_in.end()), 0.0);
            EXPECT_GE(*std::min_element(r.y_out.begin(), r.y_out.end()), 0.0);
            EXPECT_LE(*std::max_element(r.y_out.begin(), r.y_out.end()), cfg.outlet_valve.max_lift);
        }
    }
}

TEST(Simulate, ArraysShareLength) {
    const auto r = simulate(PumpConfig::defaults());
    const auto n = r.time.size();
    EXPECT_EQ(n, static_cast<std::size_t>(2000 * r.response_cycles));
    for (const auto* v : {&r.y_in, &r.y_out, &r.chamber_pressure, &r.q_in, &r.q_out}) EXPECT_EQ(v->size(), n);
    EXPECT_GE(r.backflow_fraction, 0.0);
    EXPECT_LE(r.backflow_fraction, 1.0);
}

TEST(Simulate, PressureCoupledContinuityResidual) {
    PumpConfig cfg = PumpConfig::defaults();
    cfg.forcing_mode = ForcingMode::PressureCoupled;
    for (double f : {70.0, 130.0, 180.0}) {
        cfg.drive.frequency = f;
        EXPECT_LT(simulate(cfg).max_continuity_residual, 1e-9);
    }
}

TEST(Simulate, PressureCoupledRectifiesAcrossTheEnvelope) {
    PumpConfig cfg = PumpConfig::defaults();
    cfg.forcing_mode = ForcingMode::PressureCoupled;
    const auto flows = simulate_flows(cfg, SweepSpec{}.frequencies());
    for (double q : flows) EXPECT_GT(q, 0.0);
}

TEST(Simulate, OpenPortsRectifyNothing) {
    SimOptions open;
    open.check_valves = false;
    for (auto mode : {ForcingMode::Prescribed, ForcingMode::PressureCoupled}) {
        PumpConfig cfg = PumpConfig::defaults();
        cfg.forcing_mode = mode;
        const auto r = simulate(cfg, open);
        double peak = 0.0;
        for (double q : r.q_out) peak = std::max(peak, std::abs(q));
        EXPECT_LT(std::abs(r.net_flow_rate), 1e-3 * peak);
        EXPECT_EQ(diagnose_actuation(r).classification, Actuation::Abnormal);
    }
}

TEST(Simulate, HalvingTheStepBarelyMovesNetFlow) {
    for (auto mode : {ForcingMode::Prescribed, ForcingMode::PressureCoupled}) {
        for (double f : {70.0, 100.0, 130.0}) {
            PumpConfig cfg = PumpConfig::defaults();
            cfg.forcing_mode = mode;
            cfg.drive.frequency = f;
            SimOptions fine;
            fine.steps_per_cycle = 4000;
            const double coarse_q = simulate(cfg).net_flow_rate;
            const double fine_q = simulate(cfg, fine).net_flow_rate;
            EXPECT_LT(std::abs(fine_q - coarse_q), 0.005 * std::abs(fine_q)) << to_string(mode) << " " << f;
        }
    }
}

TEST(Simulate, Deterministic) {
    const auto a = simulate(PumpConfig::defaults());
    const auto b = simulate(PumpConfig::defaults());
    EXPECT_EQ(a.y_out, b.y_out);
    EXPECT_EQ(a.q_out, b.q_out);
    EXPECT_EQ(a.net_flow_rate, b.net_flow_rate);
}

TEST(Simulate, RejectsCoarseStepAndShortRuns) {
    const PumpConfig cfg = PumpConfig::defaults();
    SimOptions o;
    o.dt = 1.0 / (50.0 * cfg.drive.frequency);
    EXPECT_THROW(simulate(cfg, o), InvalidSpec);
    o = SimOptions{};
    o.steps_per_cycle = 50;
    EXPECT_THROW(simulate(cfg, o), InvalidSpec);
    o = SimOptions{};
    o.max_cycles = 1;
    EXPECT_THROW(simulate(cfg, o), InvalidSpec);
}

TEST(Simulate, ExplicitStepIsHonoured) {
    PumpConfig cfg = PumpConfig::defaults();
    SimOptions o;
    o.dt = cfg.drive.period() / 1000.0;
    const auto r = simulate(cfg, o);
    EXPECT_EQ(r.time.size(), static_cast<std::size_t>(1000 * r.response_cycles));
}

TEST(Simulate, NonConvergenceIsReportedNotThrown) {
    SimOptions o;
    o.max_cycles = 2;
    o.convergence_tol = 1e-14;
    const auto r = simulate(PumpConfig::defaults(), o);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.cycles, 2);
}

TEST(NetFlow, HalfRectifiedSineAveragesToOneOverPi) {
    const int n = 2000;
    const double q0 = 3e-6;
    std::vector<double> q(n);
    for (int k = 0; k < n; ++k) q[static_cast<std::size_t>(k)] = q0 * std::max(0.0, std::sin(2.0 * kPi * k / n));
    EXPECT_NEAR(net_flow_rate(synthetic(q)), q0 / kPi, q0 / kPi * 1e-6);
}

TEST(NetFlow, ZeroAndEmpty) {
    EXPECT_EQ(net_flow_rate(synthetic(std::vector<double>(10, 0.0))), 0.0);
    EXPECT_THROW(net_flow_rate(SimResult{}), InvalidSpec);
}

TEST(Diagnose, ZeroMeanSineIsHalfBackflow) {
    const int n = 2000;
    std::vector<double> q(n);
    for (int k = 0; k < n; ++k) q[static_cast<std::size_t>(k)] = std::sin(2.0 * kPi * k / n);
    auto r = synthetic(q);
    EXPECT_NEAR(backflow_fraction(q), 0.5, 1e-12);
    EXPECT_EQ(diagnose_actuation(r).classification, Actuation::Abnormal);
}

TEST(Diagnose, RectifiedFlowIsNormal) {
    std::vector<double> q(100);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = 1.0 + std::sin(0.1 * static_cast<double>(k));
    const auto d = diagnose_actuation(synthetic(q));
    EXPECT_EQ(d.backflow_fraction, 0.0);
    EXPECT_EQ(d.classification, Actuation::Normal);
}

TEST(Fundamental, RecoversAmplitudeAndLag) {
    const int n = 1000;
    for (int cycles : {1, 3}) {
        std::vector<double> s(static_cast<std::size_t>(n * cycles));
        for (std::size_t k = 0; k < s.size(); ++k) {
            const double theta = 2.0 * kPi * static_cast<double>(k) / n;
            s[k] = 0.2 + 1.5 * std::sin(theta - 0.7) + 0.3 * std::sin(3.0 * theta);
        }
        const auto f = fundamental(s, cycles);
        EXPECT_NEAR(f.amplitude, 1.5, 1e-12);
        EXPECT_NEAR(f.phase_lag, 0.7, 1e-12);
    }
}

TEST(SimCsv, HeaderAndOneRowPerStep) {
    const auto r = simulate(PumpConfig::defaults());
    std::ostringstream out;
    write_sim_csv(out, r);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,y_in,y_out,p_chamber,q_in,q_out");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, r.time.size());
}

TEST(Drive, DerivedQuantities) {
    DriveSignal d;
    d.voltage_amplitude = 40.0;
    d.frequency = 100.0;
    EXPECT_NEAR(d.omega(), 2.0 * kPi * 100.0, 1e-12);
    EXPECT_DOUBLE_EQ(d.force_amplitude(), 40.0 * d.force_per_volt);
    EXPECT_DOUBLE_EQ(d.stroke_volume(), 40.0 * d.stroke_volume_per_volt);
    d.frequency = 0.0;
    EXPECT_THROW(d.validate(), InvalidSpec);
}

TEST(Config, ForcingModeRoundTrip) {
    for (auto m : {ForcingMode::Prescribed, ForcingMode::PressureCoupled}) {
        EXPECT_EQ(parse_forcing_mode(to_string(m)), m);
    }
    EXPECT_THROW(parse_forcing_mode("coupled"), InvalidSpec);
}

TEST(Config, DischargeCoefficientBounded) {
    PumpConfig cfg = PumpConfig::defaults();
    cfg.chamber.discharge_coefficient = 1.2;
    EXPECT_THROW(simulate(cfg), InvalidSpec);
}
