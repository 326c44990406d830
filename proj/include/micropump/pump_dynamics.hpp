#pragma once

/**
 * @file pump_dynamics.hpp
 * @brief Time integration of the two-valve diaphragm pump.
 *
 * Each check valve is a lumped oscillator  m y'' + c y' + k y = F_v(t)  whose
 * opening y >= 0 is held by its seat. The chamber is incompressible, so the
 * diaphragm stroke V(t) = dV0 sin(w t) must be balanced by the two ports:
 *
 *   q_in - q_out = dV/dt
 *
 * Each port is a sharp-edged orifice whose area is the valve gap b*y
 * (clipped to the bore) plus a small seat leakage area:
 *
 *   q_port = Cd A(y) sqrt(2|dP| / rho) sign(dP)
 *
 * With both ports sharing the same pressure difference the continuity
 * equation is solved in closed form at every evaluation, so the flow splits
 * between the ports in proportion to their open areas. An open valve passes
 * flow in either direction; the seat is what stops a valve from opening
 * backwards, so backflow only happens through a valve that is late to close.
 */

#include <iosfwd>
#include <string_view>
#include <vector>

#include "micropump/valve_mechanics.hpp"

namespace micropump {

inline constexpr double kMlPerMinPerM3PerS = 60.0e6;

inline double to_ml_per_min(double flow_m3_per_s) { return flow_m3_per_s * kMlPerMinPerM3PerS; }
inline double from_ml_per_min(double flow_ml_per_min) { return flow_ml_per_min / kMlPerMinPerM3PerS; }

struct ValveConfig {
    ValveSpec spec;
    double damping_coefficient = 3.0e-3;  // N s/m
    double max_lift = 1.0e-3;             // m, travel stop opposite the seat
};

/// Sinusoidal piezo drive. Force on the valves and diaphragm stroke volume
/// both scale linearly with voltage.
struct DriveSignal {
    double voltage_amplitude = 50.0;          // V
    double frequency = 130.0;                 // Hz
    double force_per_volt = 4.0e-5;           // N/V
    double stroke_volume_per_volt = 1.15e-10; // m^3/V

    double omega() const;
    double force_amplitude() const { return force_per_volt * voltage_amplitude; }
    double stroke_volume() const { return stroke_volume_per_volt * voltage_amplitude; }
    double period() const { return 1.0 / frequency; }
    void validate() const;
};

struct ChamberSpec {
    double width = 5.0e-3;                    // m
    double length = 28.0e-3;                  // m
    double inlet_orifice_area = 1.767e-6;     // m^2 (1.5 mm bore)
    double outlet_orifice_area = 1.767e-6;    // m^2
    double discharge_coefficient = 0.6;
    double seat_leakage_area = 1.767e-8;      // m^2 per port, flows even when seated

    void validate() const;
};

struct FluidSpec {
    double density = 998.0;   // kg/m^3
    double gravity = 9.81;    // m/s^2

    void validate() const;
};

enum class ForcingMode {
    /// Valves driven directly by +/- F sin(w t): outlet by the positive half,
    /// inlet by the negative half. Chamber pressure follows from the openings.
    Prescribed,
    /// Valves driven by the chamber pressure acting on their face area.
    PressureCoupled,
};

std::string_view to_string(ForcingMode mode);
ForcingMode parse_forcing_mode(std::string_view text);

struct PumpConfig {
    ValveConfig inlet_valve;
    ValveConfig outlet_valve;
    ChamberSpec chamber;
    FluidSpec fluid;
    DriveSignal drive;
    ForcingMode forcing_mode = ForcingMode::Prescribed;

    /// The default pump: 0.5 mm narrow PDMS valves at +/-50 V.
    static PumpConfig defaults();
    void validate() const;
};

struct SimOptions {
    double dt = 0.0;              // s; 0 selects period / steps_per_cycle
    int steps_per_cycle = 2000;
    int max_cycles = 200;
    double convergence_tol = 1.0e-4;
    bool check_valves = true;     // false: both ports become fixed open bores
    bool seat_contact = true;     // false: valves may swing through the seat
};

/// Time series of the final response period plus its averages. All SI.
/// The response period is usually one drive cycle; impacting valves may lock
/// onto an orbit that repeats only every `response_cycles` drive cycles.
struct SimResult {
    std::vector<double> time;
    std::vector<double> y_in;
    std::vector<double> y_out;
    std::vector<double> chamber_pressure;
    std::vector<double> q_in;
    std::vector<double> q_out;

    double frequency = 0.0;
    double period = 0.0;
    double net_flow_rate = 0.0;      // m^3/s
    double backflow_fraction = 0.0;
    double outlet_phase_lag = 0.0;   // rad, fundamental of y_out behind sin(w t)
    double outlet_amplitude = 0.0;   // m, fundamental of y_out
    double inlet_phase_lag = 0.0;    // rad, fundamental of y_in behind -sin(w t)
    double inlet_amplitude = 0.0;    // m
    double min_opening = 0.0;        // smallest y seen over the whole run
    double max_continuity_residual = 0.0;
    int cycles = 0;
    int response_cycles = 1;
    bool converged = false;

    double net_flow_ml_per_min() const { return to_ml_per_min(net_flow_rate); }
};

SimResult simulate(const PumpConfig& config, const SimOptions& options = {});

/// Time average of q_out over the stored response period.
double net_flow_rate(const SimResult& result);

enum class Actuation { Normal, Abnormal };

struct ActuationDiagnosis {
    Actuation classification = Actuation::Normal;
    double backflow_fraction = 0.0;
    double outlet_phase_lag = 0.0;
};

/// Backflow share of the outlet volume exchange and outlet valve phase.
/// Abnormal when more than a quarter of it flows backwards or no net flow
/// leaves the pump.
ActuationDiagnosis diagnose_actuation(const SimResult& result);

double backflow_fraction(const std::vector<double>& q_out);

/// Amplitude and phase lag (rad) of the drive-frequency component of a signal
/// sampled uniformly over exactly `cycles` drive periods, relative to
/// sin(2 pi cycles k / n).
struct Fundamental {
    double amplitude = 0.0;
    double phase_lag = 0.0;
};
Fundamental fundamental(const std::vector<double>& samples, int cycles = 1);

/// `t,y_in,y_out,p_chamber,q_in,q_out`, one row per step of the final
/// response period.
void write_sim_csv(std::ostream& out, const SimResult& result);

}  // namespace micropump
