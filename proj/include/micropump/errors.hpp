#pragma once

#include <stdexcept>
#include <string>

namespace micropump {

/// A geometry, material, or configuration value violates its invariant.
/// `field()` names the offending input so callers can report it verbatim.
class InvalidSpec : public std::invalid_argument {
public:
    InvalidSpec(std::string field, const std::string& message);

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The model or solver cannot produce a finite answer for valid inputs
/// (undamped resonance, non-finite objective, oversized time step, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

void require_positive(double value, const char* field);
void require_non_negative(double value, const char* field);

}  // namespace detail

}  // namespace micropump
