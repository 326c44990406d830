#pragma once

/**
 * @file performance.hpp
 * @brief Frequency and voltage sweeps, peak picking, and calibration of the
 *        four unmeasured model constants against a flow-frequency curve.
 */

#include <span>
#include <vector>

#include "micropump/pump_dynamics.hpp"

namespace micropump {

/// Drive grid. The defaults reproduce the bench envelope: +/-50 V, 70-180 Hz,
/// one reading every 10 Hz.
struct SweepSpec {
    double f_min = 70.0;   // Hz
    double f_max = 180.0;  // Hz
    double step = 10.0;    // Hz
    double voltage = 50.0; // V

    void validate() const;
    std::vector<double> frequencies() const;
};

struct FlowPoint {
    double frequency = 0.0;        // Hz
    double flow_ml_per_min = 0.0;  // clamped at 0 for simulated curves
    bool abnormal = false;
};

struct FlowFrequencyCurve {
    std::vector<FlowPoint> points;
    std::vector<FlowPoint> peaks;

    /// Strictly increasing frequency, non-negative flow.
    void validate() const;
};

/// Net flow (ml/min, unclamped) at each frequency; runs are independent and
/// may execute concurrently. Failures name the offending frequency.
std::vector<double> simulate_flows(const PumpConfig& config, std::span<const double> frequencies,
                                   const SimOptions& options = {});

FlowFrequencyCurve frequency_sweep(const PumpConfig& config, const SweepSpec& sweep,
                                   const SimOptions& options = {});
FlowFrequencyCurve frequency_sweep(const PumpConfig& config, std::span<const double> frequencies,
                                   const SimOptions& options = {});

/// Strict local maxima (endpoints compare against their one neighbour),
/// ordered by descending flow.
std::vector<FlowPoint> find_peaks(const FlowFrequencyCurve& curve);

struct VoltagePoint {
    double voltage = 0.0;
    double flow_ml_per_min = 0.0;
};

std::vector<VoltagePoint> voltage_response(const PumpConfig& config, std::span<const double> voltages,
                                           double frequency, const SimOptions& options = {});

/// The constants no bench measurement pins down.
struct CalibrationParams {
    double inlet_damping = 0.0;           // N s/m
    double outlet_damping = 0.0;          // N s/m
    double force_per_volt = 0.0;          // N/V
    double stroke_volume_per_volt = 0.0;  // m^3/V

    static CalibrationParams from_config(const PumpConfig& config);
    void apply_to(PumpConfig& config) const;
    void validate() const;
};

struct CalibrationResult {
    CalibrationParams params;
    double objective = 0.0;       // (ml/min)^2
    double seed_objective = 0.0;  // (ml/min)^2
    int iterations = 0;           // objective evaluations spent from the budget
    bool seed_returned = false;   // no evaluation improved on the seed
};

struct CalibrationOptions {
    // Orbits that have not settled after 60 cycles are chaotic enough that
    // more cycles only cost time.
    SimOptions sim = [] {
        SimOptions o;
        o.max_cycles = 60;
        return o;
    }();
    int grid_points = 5;         // per parameter, log-spaced
    double grid_decades = 2.0;   // half-width of the grid around the seed
    int zoom_levels = 3;         // grid refinements, each halving the spacing
    int beam_width = 6;          // nodes refined per level
    int starts = 4;              // independent simplex runs from the best grid nodes
    int restarts = 3;            // simplex restarts from the incumbent
    double initial_step = 0.3;   // simplex edge in log-parameter units
};

/// Sum of squared flow errors (ml/min)^2 over the measured frequencies.
double calibration_objective(const FlowFrequencyCurve& measured, const PumpConfig& config,
                             const SimOptions& options = {});

/// Least-squares fit of (c_in, c_out, kappa_F, kappa_V). A coarse log grid
/// around the seed (with the stroke scale solved in closed form at each
/// node) picks the start for restarted simplex searches in log space. The
/// seed objective is always evaluated and is not charged to `budget`.
CalibrationResult calibrate(const FlowFrequencyCurve& measured, const PumpConfig& config_template,
                            const CalibrationParams& seed, int budget,
                            const CalibrationOptions& options = {});

}  // namespace micropump
