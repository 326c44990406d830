#include "micropump/performance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "micropump/errors.hpp"
#include "micropump/nelder_mead.hpp"

namespace micropump {

void SweepSpec::validate() const {
    detail::require_positive(f_min, "sweep.f_min");
    detail::require_positive(f_max, "sweep.f_max");
    detail::require_positive(step, "sweep.step");
    detail::require_non_negative(voltage, "sweep.voltage");
    if (!(f_min < f_max)) throw InvalidSpec("sweep.f_max", "must exceed sweep.f_min");
}

std::vector<double> SweepSpec::frequencies() const {
    validate();
    std::vector<double> f;
    // Index-based grid so that 70 + 11 * 10 lands on 180 exactly.
    for (int i = 0;; ++i) {
        const double value = f_min + i * step;
        if (value > f_max + 1e-9 * step) break;
        f.push_back(value);
    }
    return f;
}

void FlowFrequencyCurve::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        detail::require_positive(points[i].frequency, "frequency_hz");
        detail::require_non_negative(points[i].flow_ml_per_min, "flow_ml_per_min");
        if (i > 0 && !(points[i].frequency > points[i - 1].frequency)) {
            throw InvalidSpec("frequency_hz", "frequencies must be strictly increasing");
        }
    }
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    // Rethrow the lowest-index failure so the reported error is deterministic.
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string at_frequency(double f, const char* what) {
    std::ostringstream msg;
    msg << "simulation at " << f << " Hz failed: " << what;
    return msg.str();
}

struct SweepRun {
    double flow_ml_per_min = 0.0;
    bool abnormal = false;
};

std::vector<SweepRun> run_sweep(const PumpConfig& config, std::span<const double> frequencies,
                                const SimOptions& options) {
    std::vector<SweepRun> runs(frequencies.size());
    parallel_for(frequencies.size(), [&](std::size_t i) {
        PumpConfig c = config;
        c.drive.frequency = frequencies[i];
        try {
            const auto r = simulate(c, options);
            runs[i].flow_ml_per_min = r.net_flow_ml_per_min();
            runs[i].abnormal = diagnose_actuation(r).classification == Actuation::Abnormal;
        } catch (const InvalidSpec& e) {
            throw InvalidSpec(e.field(), at_frequency(frequencies[i], e.what()));
        } catch (const NumericalError& e) {
            throw NumericalError(at_frequency(frequencies[i], e.what()));
        }
    });
    return runs;
}

}  // namespace

std::vector<double> simulate_flows(const PumpConfig& config, std::span<const double> frequencies,
                                   const SimOptions& options) {
    const auto runs = run_sweep(config, frequencies, options);
    std::vector<double> q(runs.size());
    std::transform(runs.begin(), runs.end(), q.begin(), [](const SweepRun& r) { return r.flow_ml_per_min; });
    return q;
}

FlowFrequencyCurve frequency_sweep(const PumpConfig& config, std::span<const double> frequencies,
                                   const SimOptions& options) {
    const auto runs = run_sweep(config, frequencies, options);
    FlowFrequencyCurve curve;
    curve.points.reserve(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        FlowPoint p;
        p.frequency = frequencies[i];
        p.flow_ml_per_min = std::max(0.0, runs[i].flow_ml_per_min);
        p.abnormal = runs[i].abnormal || runs[i].flow_ml_per_min < 0.0;
        curve.points.push_back(p);
    }
    if (curve.points.size() >= 3) curve.peaks = find_peaks(curve);
    return curve;
}

FlowFrequencyCurve frequency_sweep(const PumpConfig& config, const SweepSpec& sweep, const SimOptions& options) {
    PumpConfig c = config;
    c.drive.voltage_amplitude = sweep.voltage;
    const auto f = sweep.frequencies();
    return frequency_sweep(c, f, options);
}

std::vector<FlowPoint> find_peaks(const FlowFrequencyCurve& curve) {
    const auto& p = curve.points;
    if (p.size() < 3) throw InvalidSpec("points", "peak detection needs at least three points");
    std::vector<FlowPoint> peaks;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = p[i].flow_ml_per_min;
        const bool above_left = i == 0 || q > p[i - 1].flow_ml_per_min;
        const bool above_right = i + 1 == p.size() || q > p[i + 1].flow_ml_per_min;
        if (above_left && above_right) peaks.push_back(p[i]);
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const FlowPoint& a, const FlowPoint& b) { return a.flow_ml_per_min > b.flow_ml_per_min; });
    return peaks;
}

std::vector<VoltagePoint> voltage_response(const PumpConfig& config, std::span<const double> voltages,
                                           double frequency, const SimOptions& options) {
    std::vector<VoltagePoint> out(voltages.size());
    parallel_for(voltages.size(), [&](std::size_t i) {
        PumpConfig c = config;
        c.drive.frequency = frequency;
        c.drive.voltage_amplitude = voltages[i];
        out[i] = {voltages[i], simulate(c, options).net_flow_ml_per_min()};
    });
    return out;
}

CalibrationParams CalibrationParams::from_config(const PumpConfig& config) {
    return {config.inlet_valve.damping_coefficient, config.outlet_valve.damping_coefficient,
            config.drive.force_per_volt, config.drive.stroke_volume_per_volt};
}

void CalibrationParams::apply_to(PumpConfig& config) const {
    config.inlet_valve.damping_coefficient = inlet_damping;
    config.outlet_valve.damping_coefficient = outlet_damping;
    config.drive.force_per_volt = force_per_volt;
    config.drive.stroke_volume_per_volt = stroke_volume_per_volt;
}

void CalibrationParams::validate() const {
    detail::require_positive(inlet_damping, "inlet_damping");
    detail::require_positive(outlet_damping, "outlet_damping");
    detail::require_positive(force_per_volt, "force_per_volt");
    detail::require_positive(stroke_volume_per_volt, "stroke_volume_per_volt");
}

namespace {

constexpr std::size_t kParams = 4;
using LogVector = std::array<double, kParams>;

// Simplex coordinates are log(param / seed), clamped to three decades.
constexpr double kMaxLogOffset = 6.907755278982137;  // ln(1000)

CalibrationParams from_log(const CalibrationParams& seed, std::span<const double> x) {
    auto scaled = [&](double base, double offset) {
        return base * std::exp(std::clamp(offset, -kMaxLogOffset, kMaxLogOffset));
    };
    return {scaled(seed.inlet_damping, x[0]), scaled(seed.outlet_damping, x[1]),
            scaled(seed.force_per_volt, x[2]), scaled(seed.stroke_volume_per_volt, x[3])};
}

LogVector to_log(const CalibrationParams& seed, const CalibrationParams& p) {
    return {std::log(p.inlet_damping / seed.inlet_damping), std::log(p.outlet_damping / seed.outlet_damping),
            std::log(p.force_per_volt / seed.force_per_volt),
            std::log(p.stroke_volume_per_volt / seed.stroke_volume_per_volt)};
}

double sum_squared_error(std::span<const double> simulated, const FlowFrequencyCurve& measured) {
    double ss = 0.0;
    for (std::size_t i = 0; i < simulated.size(); ++i) {
        const double e = simulated[i] - measured.points[i].flow_ml_per_min;
        ss += e * e;
    }
    if (!std::isfinite(ss)) throw NumericalError("calibration objective is not finite");
    return ss;
}

std::vector<double> measured_frequencies(const FlowFrequencyCurve& measured) {
    std::vector<double> f(measured.points.size());
    std::transform(measured.points.begin(), measured.points.end(), f.begin(),
                   [](const FlowPoint& p) { return p.frequency; });
    return f;
}

}  // namespace

double calibration_objective(const FlowFrequencyCurve& measured, const PumpConfig& config,
                             const SimOptions& options) {
    const auto f = measured_frequencies(measured);
    return sum_squared_error(simulate_flows(config, f, options), measured);
}

CalibrationResult calibrate(const FlowFrequencyCurve& measured, const PumpConfig& config_template,
                            const CalibrationParams& seed, int budget, const CalibrationOptions& options) {
    measured.validate();
    if (measured.points.size() < 4) throw InvalidSpec("measured", "calibration needs at least four points");
    seed.validate();
    if (budget < 0) throw InvalidSpec("budget", "must be non-negative");

    const auto freqs = measured_frequencies(measured);
    double data_scale = 0.0;
    for (const auto& p : measured.points) data_scale += p.flow_ml_per_min * p.flow_ml_per_min;

    auto flows_for = [&](const CalibrationParams& p) {
        PumpConfig c = config_template;
        p.apply_to(c);
        return simulate_flows(c, freqs, options.sim);
    };

    CalibrationResult result;
    result.params = seed;
    result.seed_objective = sum_squared_error(flows_for(seed), measured);
    result.objective = result.seed_objective;
    int used = 0;

    auto consider = [&](const CalibrationParams& p, double objective) {
        if (objective < result.objective) {
            result.objective = objective;
            result.params = p;
        }
    };

    // Coarse grid over the three nonlinear constants. The net flow is
    // proportional to the stroke volume when the valves are driven directly,
    // so the stroke scale at each node is the closed-form least-squares one.
    struct Node {
        CalibrationParams params;
        double objective;
        std::array<double, 3> at;  // log offsets of (c_in, c_out, kappa_F)
    };
    std::vector<Node> nodes;
    const bool stroke_is_linear = config_template.forcing_mode == ForcingMode::Prescribed;
    std::vector<std::array<double, 3>> visited;
    auto evaluate_node = [&](const std::array<double, 3>& at) -> std::optional<Node> {
        if (used >= budget) return std::nullopt;
        for (const auto& v : visited) {
            if (std::abs(v[0] - at[0]) < 1e-9 && std::abs(v[1] - at[1]) < 1e-9 && std::abs(v[2] - at[2]) < 1e-9) {
                return std::nullopt;
            }
        }
        visited.push_back(at);
        CalibrationParams p = from_log(seed, std::array<double, kParams>{at[0], at[1], at[2], 0.0});
        auto q = flows_for(p);
        ++used;
        double qq = 0.0;
        double qm = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            qq += q[i] * q[i];
            qm += q[i] * measured.points[i].flow_ml_per_min;
        }
        if (qq > 0.0 && qm > 0.0) {
            const double scale = std::clamp(qm / qq, 1e-3, 1e3);
            p.stroke_volume_per_volt *= scale;
            if (stroke_is_linear) {
                for (double& v : q) v *= scale;
            } else {
                if (used >= budget) return std::nullopt;
                q = flows_for(p);
                ++used;
            }
        }
        Node node{p, sum_squared_error(q, measured), at};
        consider(node.params, node.objective);
        return node;
    };
    auto by_objective = [](const Node& a, const Node& b) { return a.objective < b.objective; };

    double spacing = 0.0;
    if (options.grid_points > 0) {
        const int g = options.grid_points;
        std::vector<double> offsets(static_cast<std::size_t>(g), 0.0);
        if (g > 1) spacing = 2.0 * std::log(10.0) * options.grid_decades / (g - 1);
        for (int i = 0; i < g && g > 1; ++i) offsets[static_cast<std::size_t>(i)] = spacing * i - spacing * (g - 1) / 2.0;
        for (double a : offsets) {
            for (double b : offsets) {
                for (double c : offsets) {
                    if (auto node = evaluate_node({a, b, c})) nodes.push_back(*node);
                }
            }
        }
    }
    std::stable_sort(nodes.begin(), nodes.end(), by_objective);

    // Beam refinement: halve the spacing and probe the 26 neighbours of each
    // of the best nodes so far. A one-decade grid is too coarse to tell the
    // basins of a rugged landscape apart on its own.
    for (int level = 0; level < options.zoom_levels && spacing > 0.0 && !nodes.empty(); ++level) {
        spacing *= 0.5;
        const std::size_t beam = std::min<std::size_t>(static_cast<std::size_t>(options.beam_width), nodes.size());
        std::vector<Node> next(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(beam));
        for (std::size_t k = 0; k < beam; ++k) {
            const auto centre = nodes[k].at;
            for (int i = -1; i <= 1; ++i) {
                for (int j = -1; j <= 1; ++j) {
                    for (int l = -1; l <= 1; ++l) {
                        if (i == 0 && j == 0 && l == 0) continue;
                        if (auto node = evaluate_node({centre[0] + i * spacing, centre[1] + j * spacing,
                                                       centre[2] + l * spacing})) {
                            next.push_back(*node);
                        }
                    }
                }
            }
        }
        std::stable_sort(next.begin(), next.end(), by_objective);
        nodes = std::move(next);
    }
    // The seed itself always gets a simplex run: a seed already inside the
    // right basin must not be abandoned for a grid node in another one.
    nodes.insert(nodes.begin(), Node{seed, result.seed_objective, {0.0, 0.0, 0.0}});

    auto objective = [&](std::span<const double> x) {
        return sum_squared_error(flows_for(from_log(seed, x)), measured);
    };
    const double f_tol = 1e-12 * data_scale;
    const double x_tol = 1e-7;
    auto local_search = [&](const CalibrationParams& from, double step, int allowance) {
        const auto start = to_log(seed, from);
        const std::vector<double> steps(kParams, step);
        const auto nm = nelder_mead(objective, std::vector<double>(start.begin(), start.end()), steps, allowance,
                                    f_tol, x_tol);
        used += nm.evaluations;
        return Node{from_log(seed, nm.x), nm.value, {0.0, 0.0, 0.0}};
    };

    // Independent simplex runs from the seed and the best few grid nodes,
    // then restarts from the incumbent with shrinking simplices.
    const int starts = std::min<int>(options.starts + 1, static_cast<int>(nodes.size()));
    for (int s = 0; s < starts; ++s) {
        const int remaining = budget - used;
        const int allowance = remaining / (starts - s + 1);
        if (allowance <= static_cast<int>(kParams)) break;
        const auto found = local_search(nodes[static_cast<std::size_t>(s)].params, options.initial_step, allowance);
        consider(found.params, found.objective);
    }
    double step = options.initial_step * 0.25;
    for (int restart = 0; restart < options.restarts; ++restart) {
        const int remaining = budget - used;
        if (remaining <= static_cast<int>(kParams)) break;
        const double before = result.objective;
        const auto found = local_search(result.params, step, remaining);
        consider(found.params, found.objective);
        if (!(result.objective < before)) break;
        step *= 0.25;
    }

    result.iterations = used;
    result.seed_returned = !(result.objective < result.seed_objective);
    return result;
}

}  // namespace micropump
