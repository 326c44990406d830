#include "micropump/thermal_loop.hpp"

#include <cmath>
#include <utility>

#include "micropump/errors.hpp"

namespace micropump {

ThermalModel fit_thermal_model(std::span<const PowerTemperature> points) {
    if (points.size() != 2) throw InvalidSpec("points", "exactly two (power, temperature) points are required");
    PowerTemperature lo = points[0];
    PowerTemperature hi = points[1];
    for (const auto& p : points) {
        if (!std::isfinite(p.power) || !std::isfinite(p.temperature)) {
            throw InvalidSpec("points", "non-finite power or temperature");
        }
    }
    if (lo.power == hi.power) throw InvalidSpec("points", "fit points share one power; the fit is singular");
    if (lo.power > hi.power) std::swap(lo, hi);

    ThermalModel m;
    m.slope = (hi.temperature - lo.temperature) / (hi.power - lo.power);
    if (!(m.slope > 0.0)) {
        throw InvalidSpec("points", "core temperature must rise with power (slope > 0)");
    }
    m.offset = lo.temperature - m.slope * lo.power;
    m.power_min = lo.power;
    m.power_max = hi.power;
    m.low = lo;
    m.high = hi;
    return m;
}

CoreTemperature core_temperature(const ThermalModel& model, double power) {
    CoreTemperature r;
    r.extrapolated = power < model.power_min || power > model.power_max;
    const double mid = 0.5 * (model.low.power + model.high.power);
    const auto& anchor = power < mid ? model.low : model.high;
    r.temperature = anchor.temperature + model.slope * (power - anchor.power);
    return r;
}

}  // namespace micropump
