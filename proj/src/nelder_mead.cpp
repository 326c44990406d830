#include "micropump/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "micropump/errors.hpp"

namespace micropump {

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> start, std::span<const double> step,
                             int max_evaluations, double f_tol, double x_tol) {
    const std::size_t n = start.size();
    if (n == 0 || step.size() != n) throw InvalidSpec("step", "must match the dimension of the start point");

    NelderMeadResult result;
    result.x = start;
    if (max_evaluations <= 0) {
        result.value = std::numeric_limits<double>::infinity();
        return result;
    }

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };

    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({start, eval(start)});
    for (std::size_t i = 0; i < n && evals < max_evaluations; ++i) {
        auto x = start;
        x[i] += step[i];
        simplex.push_back({x, eval(x)});
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    if (simplex.size() == n + 1) {
        std::vector<double> centroid(n);
        auto along = [&](const std::vector<double>& from, double t) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = centroid[i] + t * (from[i] - centroid[i]);
            return x;
        };

        while (evals < max_evaluations) {
            std::stable_sort(simplex.begin(), simplex.end(), by_value);

            double spread = 0.0;
            for (std::size_t v = 1; v <= n; ++v) {
                for (std::size_t i = 0; i < n; ++i) {
                    spread = std::max(spread, std::abs(simplex[v].x[i] - simplex[0].x[i]));
                }
            }
            if (simplex[n].f - simplex[0].f <= f_tol && spread <= x_tol) {
                result.converged = true;
                break;
            }

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t v = 0; v < n; ++v) {
                for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
            }
            Vertex& worst = simplex[n];

            auto reflected = along(worst.x, -1.0);
            const double fr = eval(reflected);
            if (fr < simplex[0].f) {
                if (evals >= max_evaluations) {
                    worst = {reflected, fr};
                    break;
                }
                auto expanded = along(worst.x, -2.0);
                const double fe = eval(expanded);
                worst = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
            } else if (fr < simplex[n - 1].f) {
                worst = {reflected, fr};
            } else {
                if (evals >= max_evaluations) break;
                const bool outside = fr < worst.f;
                auto contracted = along(outside ? reflected : worst.x, 0.5);
                const double fc = eval(contracted);
                if (fc < std::min(fr, worst.f)) {
                    worst = {contracted, fc};
                } else {
                    for (std::size_t v = 1; v <= n && evals < max_evaluations; ++v) {
                        for (std::size_t i = 0; i < n; ++i) {
                            simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
                        }
                        simplex[v].f = eval(simplex[v].x);
                    }
                }
            }
        }
    }

    const auto best = std::min_element(simplex.begin(), simplex.end(), by_value);
    result.x = best->x;
    result.value = best->f;
    result.evaluations = evals;
    return result;
}

}  // namespace micropump
