#pragma once

#include <span>

namespace micropump {

struct PowerTemperature {
    double power = 0.0;        // W
    double temperature = 0.0;  // degC
};

/// Affine core temperature T = offset + slope * P through two measured
/// points. The offset lumps ambient temperature with the fixed part of the
/// loop's thermal resistance; it is not the lab ambient.
struct ThermalModel {
    double offset = 0.0;  // degC
    double slope = 0.0;   // K/W
    double power_min = 0.0;
    double power_max = 0.0;
    PowerTemperature low;
    PowerTemperature high;
};

ThermalModel fit_thermal_model(std::span<const PowerTemperature> points);

struct CoreTemperature {
    double temperature = 0.0;
    bool extrapolated = false;
};

/// Evaluated from the nearer fit point so both fit points are reproduced
/// exactly.
CoreTemperature core_temperature(const ThermalModel& model, double power);

}  // namespace micropump
