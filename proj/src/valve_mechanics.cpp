#include "micropump/valve_mechanics.hpp"

#include <cmath>
#include <limits>

#include "micropump/errors.hpp"

namespace micropump {

std::string_view to_string(ValveShape shape) {
    switch (shape) {
        case ValveShape::Standard: return "standard";
        case ValveShape::Narrow: return "narrow";
        case ValveShape::Short: return "short";
    }
    return "standard";
}

ValveShape parse_valve_shape(std::string_view text) {
    if (text == "standard") return ValveShape::Standard;
    if (text == "narrow") return ValveShape::Narrow;
    if (text == "short") return ValveShape::Short;
    throw InvalidSpec("shape", "expected standard, narrow or short, got '" + std::string(text) + "'");
}

ValveSpec ValveSpec::preset(ValveShape shape, double thickness) {
    ValveSpec spec;
    spec.shape = shape;
    spec.thickness = thickness;
    switch (shape) {
        case ValveShape::Standard: break;
        case ValveShape::Narrow: spec.width = 2.0e-3; break;
        case ValveShape::Short: spec.length = 4.0e-3; break;
    }
    return spec;
}

void ValveSpec::validate() const {
    detail::require_positive(length, "length");
    detail::require_positive(width, "width");
    detail::require_positive(thickness, "thickness");
    detail::require_positive(elastic_modulus, "elastic_modulus");
    detail::require_positive(density, "density");
}

LumpedValveParams derive_lumped_params(const ValveSpec& spec, double damping_coefficient) {
    spec.validate();
    detail::require_non_negative(damping_coefficient, "damping_coefficient");

    const double h = spec.thickness;
    const double length = spec.length;

    LumpedValveParams p;
    p.second_moment = spec.width * h * h * h / 12.0;
    p.spring_constant = 3.0 * spec.elastic_modulus * p.second_moment / (length * length * length);
    p.mass = spec.density * length * spec.width * h;
    p.natural_frequency = std::sqrt(p.spring_constant / p.mass);
    p.damping_coefficient = damping_coefficient;
    p.damping_factor = damping_coefficient / (2.0 * std::sqrt(p.spring_constant * p.mass));
    return p;
}

double damping_for_factor(const ValveSpec& spec, double damping_factor) {
    detail::require_non_negative(damping_factor, "damping_factor");
    const auto p = derive_lumped_params(spec, 0.0);
    return 2.0 * damping_factor * std::sqrt(p.spring_constant * p.mass);
}

double steady_state_amplitude(const LumpedValveParams& params, double force, double omega) {
    detail::require_non_negative(force, "force");
    detail::require_positive(omega, "omega");
    const double elastic = params.spring_constant - params.mass * omega * omega;
    const double viscous = params.damping_coefficient * omega;
    // omega_n = sqrt(k/m) reproduces k only to rounding, so a few ulps of
    // k count as exact resonance.
    const bool at_resonance = std::abs(elastic) <= 8.0 * std::numeric_limits<double>::epsilon() * params.spring_constant;
    const double denom = std::hypot(elastic, viscous);
    if (denom == 0.0 || (viscous == 0.0 && at_resonance)) {
        throw NumericalError("undamped valve driven exactly at resonance: amplitude is unbounded");
    }
    return force / denom;
}

double steady_state_phase(const LumpedValveParams& params, double omega) {
    return std::atan2(params.damping_coefficient * omega,
                      params.spring_constant - params.mass * omega * omega);
}

}  // namespace micropump
