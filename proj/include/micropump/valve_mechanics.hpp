#pragma once

/**
 * @file valve_mechanics.hpp
 * @brief Cantilever check-valve geometry and its lumped single-DOF model.
 *
 * The valve flap is treated as a rectangular cantilever loaded at the tip:
 *
 *   I   = b h^3 / 12
 *   k   = 3 E I / L^3
 *   m   = rho_v L b h          (full flap mass, not a modal mass)
 *   w_n = sqrt(k / m)          (in vacuum, no added fluid mass)
 *   zeta = c / (2 sqrt(k m))
 */

#include <string>
#include <string_view>

namespace micropump {

enum class ValveShape { Standard, Narrow, Short };

std::string_view to_string(ValveShape shape);
ValveShape parse_valve_shape(std::string_view text);

/// PDMS material constants. The source material is only named, so these are
/// configurable defaults rather than measured values.
inline constexpr double kPdmsElasticModulus = 750.0e3;  // Pa
inline constexpr double kPdmsDensity = 970.0;           // kg/m^3

struct ValveSpec {
    double length = 5.0e-3;      // m
    double width = 3.0e-3;       // m
    double thickness = 0.5e-3;   // m
    double elastic_modulus = kPdmsElasticModulus;
    double density = kPdmsDensity;
    ValveShape shape = ValveShape::Standard;

    /// Standard 5 x 3 mm flap; narrow trims the width to 2 mm, short trims
    /// the length to 4 mm.
    static ValveSpec preset(ValveShape shape, double thickness = 0.5e-3);

    /// Throws InvalidSpec naming the first non-positive field.
    void validate() const;

    /// Flap face area L*b that the chamber pressure acts on.
    double face_area() const { return length * width; }
};

struct LumpedValveParams {
    double mass = 0.0;                 // kg
    double spring_constant = 0.0;      // N/m
    double second_moment = 0.0;        // m^4
    double natural_frequency = 0.0;    // rad/s
    double damping_coefficient = 0.0;  // N s/m
    double damping_factor = 0.0;       // -
};

LumpedValveParams derive_lumped_params(const ValveSpec& spec, double damping_coefficient);

/// Damping coefficient giving the requested damping factor for a spec.
double damping_for_factor(const ValveSpec& spec, double damping_factor);

/// Closed-form steady-state amplitude of m y'' + c y' + k y = F sin(w t)
/// (no seat contact). Throws NumericalError at undamped exact resonance.
double steady_state_amplitude(const LumpedValveParams& params, double force, double omega);

/// Phase lag of that steady-state response behind the forcing, atan2(c w, k - m w^2).
double steady_state_phase(const LumpedValveParams& params, double omega);

}  // namespace micropump
