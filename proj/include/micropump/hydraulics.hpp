#pragma once

/**
 * @file hydraulics.hpp
 * @brief Head-loss bookkeeping, linear loss fits and the pump operating point.
 *
 * With both reservoirs open to atmosphere, the inlet velocity neglected and
 * the outlet taken as datum, the Bernoulli balance reduces to
 *
 *   H_L = z1 - V2^2 / (2 g)
 *
 * Component losses are linear in velocity, and the pump P-Q line runs from
 * (0, H_max) to (Q_max, 0).
 */

#include <span>
#include <vector>

namespace micropump {

struct HeadLossResult {
    double head = 0.0;           // m
    bool negative_loss = false;  // inputs imply energy gain; check z1 and V2
};

HeadLossResult total_head_loss(double elevation, double outlet_velocity, double gravity);

/// H_pump = H_total - H_coldplate - H_pipe_other. Throws InvalidSpec when the
/// remainder is negative.
double decompose_pump_resistance(double total, double coldplate, double pipe_other);

struct HeadLossSample {
    double velocity = 0.0;  // m/s
    double head = 0.0;      // m
};

struct LinearLossFit {
    double coefficient = 0.0;   // m per (m/s)
    double rms_residual = 0.0;  // m
};

/// Least-squares H = a V through the origin.
LinearLossFit fit_linear_loss(std::span<const HeadLossSample> samples);

class PumpCurve {
public:
    /// shutoff_head in m, max_flow in m^3/s.
    PumpCurve(double shutoff_head, double max_flow);

    static PumpCurve from_ml_per_min(double shutoff_head, double max_flow_ml_per_min);

    double shutoff_head() const { return shutoff_head_; }
    double max_flow() const { return max_flow_; }
    double max_flow_ml_per_min() const;

    /// Head delivered at flow q (m^3/s), on [0, Q_max].
    double head_at(double flow) const;
    /// Flow delivered against head h (m), on [0, H_max].
    double flow_at(double head) const;

private:
    double shutoff_head_;
    double max_flow_;
};

/// Linear system resistance H = a Q, split by component. Coefficients in
/// metres of head per (m^3/s).
struct SystemCurve {
    double pump_internal = 0.0;
    double coldplate = 0.0;
    double pipe_other = 0.0;

    /// Converts per-velocity loss coefficients (m per m/s) using the pipe
    /// cross-section that relates velocity to volumetric flow.
    static SystemCurve from_velocity_coefficients(double pump_internal, double coldplate,
                                                  double pipe_other, double pipe_area);

    double total() const { return pump_internal + coldplate + pipe_other; }
    double head_at(double flow) const { return total() * flow; }
    void validate() const;
};

struct OperatingPoint {
    double flow = 0.0;  // m^3/s
    double head = 0.0;  // m
};

OperatingPoint operating_point(const PumpCurve& pump, const SystemCurve& system);

double velocity_to_flow(double velocity, double pipe_area);
double flow_to_velocity(double flow, double pipe_area);

}  // namespace micropump
