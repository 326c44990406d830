#pragma once

#include <functional>
#include <span>
#include <vector>

namespace micropump {

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Downhill simplex minimiser with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, 1/2, 1/2). Stops when the simplex
/// values agree to `f_tol` (absolute) and its vertices to `x_tol`, or after
/// `max_evaluations` calls of `f`.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> start, std::span<const double> step,
                             int max_evaluations, double f_tol, double x_tol);

}  // namespace micropump
