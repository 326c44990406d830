#include "micropump/errors.hpp"

#include <cmath>

namespace micropump {

InvalidSpec::InvalidSpec(std::string field, const std::string& message)
    : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}

namespace detail {

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw InvalidSpec(field, "must be positive and finite");
    }
}

void require_non_negative(double value, const char* field) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw InvalidSpec(field, "must be non-negative and finite");
    }
}

}  // namespace detail

}  // namespace micropump
