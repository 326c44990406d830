#include "micropump/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "micropump/errors.hpp"
#include "micropump/pump_dynamics.hpp"

namespace micropump {

HeadLossResult total_head_loss(double elevation, double outlet_velocity, double gravity) {
    detail::require_positive(gravity, "gravity");
    HeadLossResult r;
    r.head = elevation - outlet_velocity * outlet_velocity / (2.0 * gravity);
    r.negative_loss = r.head < 0.0;
    return r;
}

double decompose_pump_resistance(double total, double coldplate, double pipe_other) {
    detail::require_non_negative(total, "total_head");
    detail::require_non_negative(coldplate, "coldplate_head");
    detail::require_non_negative(pipe_other, "pipe_other_head");
    const double pump = total - coldplate - pipe_other;
    if (pump < 0.0) {
        std::ostringstream msg;
        msg << "component losses (" << coldplate << " + " << pipe_other << " m) exceed the total "
            << total << " m";
        throw InvalidSpec("pump_head", msg.str());
    }
    return pump;
}

LinearLossFit fit_linear_loss(std::span<const HeadLossSample> samples) {
    if (samples.size() < 2) throw InvalidSpec("samples", "at least two samples are required");
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                              [](const auto& a, const auto& b) { return a.velocity < b.velocity; });
    if (lo->velocity == hi->velocity) {
        throw InvalidSpec("samples", "all samples share one velocity; the slope is undetermined");
    }

    double vv = 0.0;
    double vh = 0.0;
    for (const auto& s : samples) {
        detail::require_non_negative(s.velocity, "velocity");
        detail::require_non_negative(s.head, "head");
        vv += s.velocity * s.velocity;
        vh += s.velocity * s.head;
    }
    LinearLossFit fit;
    fit.coefficient = vh / vv;
    double ss = 0.0;
    for (const auto& s : samples) {
        const double e = s.head - fit.coefficient * s.velocity;
        ss += e * e;
    }
    fit.rms_residual = std::sqrt(ss / static_cast<double>(samples.size()));
    return fit;
}

PumpCurve::PumpCurve(double shutoff_head, double max_flow)
    : shutoff_head_(shutoff_head), max_flow_(max_flow) {
    detail::require_positive(shutoff_head, "pump.shutoff_head");
    detail::require_positive(max_flow, "pump.max_flow");
}

PumpCurve PumpCurve::from_ml_per_min(double shutoff_head, double max_flow_ml_per_min) {
    return PumpCurve(shutoff_head, micropump::from_ml_per_min(max_flow_ml_per_min));
}

double PumpCurve::max_flow_ml_per_min() const { return to_ml_per_min(max_flow_); }

double PumpCurve::head_at(double flow) const {
    if (flow < 0.0 || flow > max_flow_) throw InvalidSpec("flow", "outside [0, Q_max]");
    return shutoff_head_ * (1.0 - flow / max_flow_);
}

double PumpCurve::flow_at(double head) const {
    if (head < 0.0 || head > shutoff_head_) throw InvalidSpec("head", "outside [0, H_max]");
    return max_flow_ * (1.0 - head / shutoff_head_);
}

SystemCurve SystemCurve::from_velocity_coefficients(double pump_internal, double coldplate,
                                                    double pipe_other, double pipe_area) {
    detail::require_positive(pipe_area, "pipe.area");
    SystemCurve s{pump_internal / pipe_area, coldplate / pipe_area, pipe_other / pipe_area};
    s.validate();
    return s;
}

void SystemCurve::validate() const {
    detail::require_non_negative(pump_internal, "system.pump_internal");
    detail::require_non_negative(coldplate, "system.coldplate");
    detail::require_non_negative(pipe_other, "system.pipe_other");
}

OperatingPoint operating_point(const PumpCurve& pump, const SystemCurve& system) {
    system.validate();
    const double a = system.total();
    // H_max (1 - Q / Q_max) = a Q
    OperatingPoint op;
    op.flow = pump.shutoff_head() / (pump.shutoff_head() / pump.max_flow() + a);
    op.head = a * op.flow;
    return op;
}

double velocity_to_flow(double velocity, double pipe_area) {
    detail::require_positive(pipe_area, "pipe.area");
    return velocity * pipe_area;
}

double flow_to_velocity(double flow, double pipe_area) {
    detail::require_positive(pipe_area, "pipe.area");
    return flow / pipe_area;
}

}  // namespace micropump
