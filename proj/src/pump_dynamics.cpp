#include "micropump/pump_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "micropump/errors.hpp"

namespace micropump {

double DriveSignal::omega() const { return 2.0 * std::numbers::pi * frequency; }

void DriveSignal::validate() const {
    // Zero voltage is accepted: it is the "pump switched off" case.
    detail::require_non_negative(voltage_amplitude, "drive.voltage");
    detail::require_positive(frequency, "drive.frequency");
    detail::require_positive(force_per_volt, "drive.force_per_volt");
    detail::require_positive(stroke_volume_per_volt, "drive.stroke_volume_per_volt");
}

void ChamberSpec::validate() const {
    detail::require_positive(width, "chamber.width");
    detail::require_positive(length, "chamber.length");
    detail::require_positive(inlet_orifice_area, "chamber.inlet_orifice_area");
    detail::require_positive(outlet_orifice_area, "chamber.outlet_orifice_area");
    detail::require_positive(discharge_coefficient, "chamber.discharge_coefficient");
    if (discharge_coefficient > 1.0) {
        throw InvalidSpec("chamber.discharge_coefficient", "must lie in (0, 1]");
    }
    detail::require_positive(seat_leakage_area, "chamber.seat_leakage_area");
}

void FluidSpec::validate() const {
    detail::require_positive(density, "fluid.density");
    detail::require_positive(gravity, "fluid.gravity");
}

std::string_view to_string(ForcingMode mode) {
    return mode == ForcingMode::Prescribed ? "prescribed" : "pressure_coupled";
}

ForcingMode parse_forcing_mode(std::string_view text) {
    if (text == "prescribed") return ForcingMode::Prescribed;
    if (text == "pressure_coupled") return ForcingMode::PressureCoupled;
    throw InvalidSpec("forcing_mode", "expected prescribed or pressure_coupled, got '" + std::string(text) + "'");
}

namespace {

// Message of an InvalidSpec without its "field: " prefix.
std::string reason(const InvalidSpec& e) {
    const std::string what = e.what();
    return what.substr(std::min(what.size(), e.field().size() + 2));
}

}  // namespace

PumpConfig PumpConfig::defaults() {
    PumpConfig config;
    config.inlet_valve.spec = ValveSpec::preset(ValveShape::Narrow, 0.5e-3);
    config.outlet_valve.spec = ValveSpec::preset(ValveShape::Narrow, 0.5e-3);
    return config;
}

void PumpConfig::validate() const {
    try {
        inlet_valve.spec.validate();
        detail::require_non_negative(inlet_valve.damping_coefficient, "damping_coefficient");
    } catch (const InvalidSpec& e) {
        throw InvalidSpec("inlet_valve." + e.field(), reason(e));
    }
    try {
        outlet_valve.spec.validate();
        detail::require_non_negative(outlet_valve.damping_coefficient, "damping_coefficient");
    } catch (const InvalidSpec& e) {
        throw InvalidSpec("outlet_valve." + e.field(), reason(e));
    }
    chamber.validate();
    fluid.validate();
    drive.validate();
}

namespace {

struct ValveState {
    double y = 0.0;
    double v = 0.0;
};

struct Oscillator {
    double mass;
    double stiffness;
    double damping;
    double width;
    double face_area;
    double bore_area;
};

struct PortFlow {
    double pressure = 0.0;
    double q_in = 0.0;
    double q_out = 0.0;
    double area_in = 0.0;
    double area_out = 0.0;
};

class PumpModel {
public:
    PumpModel(const PumpConfig& config, const SimOptions& options)
        : chamber_(config.chamber),
          fluid_(config.fluid),
          mode_(config.forcing_mode),
          check_valves_(options.check_valves),
          omega_(config.drive.omega()),
          force_(config.drive.force_amplitude()),
          stroke_(config.drive.stroke_volume()),
          inlet_(make_oscillator(config.inlet_valve, config.chamber.inlet_orifice_area)),
          outlet_(make_oscillator(config.outlet_valve, config.chamber.outlet_orifice_area)) {}

    const Oscillator& inlet() const { return inlet_; }
    const Oscillator& outlet() const { return outlet_; }

    double volume_rate(double t) const { return stroke_ * omega_ * std::cos(omega_ * t); }

    double port_area(const Oscillator& valve, double y) const {
        if (!check_valves_) return valve.bore_area;
        return std::min(valve.width * std::max(y, 0.0), valve.bore_area) + chamber_.seat_leakage_area;
    }

    PortFlow ports(double t, double y_in, double y_out) const {
        PortFlow f;
        f.area_in = port_area(inlet_, y_in);
        f.area_out = port_area(outlet_, y_out);
        const double dvdt = volume_rate(t);
        // q_in - q_out = dV/dt with q_out = Cd A_out s, q_in = -Cd A_in s.
        const double s = -dvdt / (chamber_.discharge_coefficient * (f.area_in + f.area_out));
        f.pressure = 0.5 * fluid_.density * s * std::abs(s);
        f.q_out = chamber_.discharge_coefficient * f.area_out * s;
        f.q_in = -chamber_.discharge_coefficient * f.area_in * s;
        return f;
    }

    std::array<double, 2> forces(double t, double y_in, double y_out) const {
        if (mode_ == ForcingMode::Prescribed) {
            const double drive = force_ * std::sin(omega_ * t);
            return {-drive, drive};
        }
        const double dp = ports(t, y_in, y_out).pressure;
        return {-dp * inlet_.face_area, dp * outlet_.face_area};
    }

    /// Largest local oscillation rate of the linearised valve equations.
    double stiffness_rate(double t, const ValveState& in, const ValveState& out) const {
        double rate = std::max(std::sqrt(inlet_.stiffness / inlet_.mass),
                               std::sqrt(outlet_.stiffness / outlet_.mass));
        rate = std::max({rate, inlet_.damping / inlet_.mass, outlet_.damping / outlet_.mass});
        if (mode_ != ForcingMode::PressureCoupled || !check_valves_) return rate;

        const auto f = ports(t, in.y, out.y);
        const double total = f.area_in + f.area_out;
        const double dp_darea = 2.0 * std::abs(f.pressure) / total;
        auto valve_rate = [&](const Oscillator& v, double y) {
            const bool in_gap_range = y >= 0.0 && v.width * y < v.bore_area;
            const double dforce = in_gap_range ? v.face_area * dp_darea * v.width : 0.0;
            return std::sqrt((v.stiffness + dforce) / v.mass);
        };
        return std::max({rate, valve_rate(inlet_, in.y), valve_rate(outlet_, out.y)});
    }

    /// One classical RK4 step of both valves.
    void rk4(double t, double h, ValveState& in, ValveState& out) const {
        using State = std::array<double, 4>;
        auto deriv = [&](double tt, const State& s) {
            const auto f = forces(tt, s[0], s[2]);
            return State{s[1], (f[0] - inlet_.damping * s[1] - inlet_.stiffness * s[0]) / inlet_.mass,
                         s[3], (f[1] - outlet_.damping * s[3] - outlet_.stiffness * s[2]) / outlet_.mass};
        };
        auto axpy = [](const State& a, double scale, const State& b) {
            State r;
            for (std::size_t i = 0; i < 4; ++i) r[i] = a[i] + scale * b[i];
            return r;
        };
        const State s0{in.y, in.v, out.y, out.v};
        const State k1 = deriv(t, s0);
        const State k2 = deriv(t + 0.5 * h, axpy(s0, 0.5 * h, k1));
        const State k3 = deriv(t + 0.5 * h, axpy(s0, 0.5 * h, k2));
        const State k4 = deriv(t + h, axpy(s0, h, k3));
        State s;
        for (std::size_t i = 0; i < 4; ++i) s[i] = s0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        in = {s[0], s[1]};
        out = {s[2], s[3]};
    }

private:
    static Oscillator make_oscillator(const ValveConfig& valve, double bore_area) {
        const auto p = derive_lumped_params(valve.spec, valve.damping_coefficient);
        return {p.mass, p.spring_constant, p.damping_coefficient, valve.spec.width,
                valve.spec.face_area(), bore_area};
    }

    ChamberSpec chamber_;
    FluidSpec fluid_;
    ForcingMode mode_;
    bool check_valves_;
    double omega_;
    double force_;
    double stroke_;
    Oscillator inlet_;
    Oscillator outlet_;
};

constexpr int kMaxSubsteps = 1 << 16;
constexpr double kStabilityFraction = 0.5;  // h * local rate

// Inelastic contact with the seat (y = 0) and the travel stop (y = lift).
void clamp_to_stops(ValveState& s, double lift) {
    if (s.y < 0.0) {
        s = {0.0, 0.0};
    } else if (s.y > lift) {
        s = {lift, 0.0};
    }
}

bool settled(double current, double previous, double scale, double tol) {
    return std::abs(current - previous) <= tol * scale;
}

constexpr std::size_t kMaxResponseCycles = 4;

struct CycleRecord {
    explicit CycleRecord(std::size_t n)
        : time(n), y_in(n), y_out(n), pressure(n), q_in(n), q_out(n) {}

    void summarize() {
        double sum = 0.0;
        for (double q : q_out) sum += q;
        mean_q = sum / static_cast<double>(q_out.size());
        amp_in = fundamental(y_in).amplitude;
        amp_out = fundamental(y_out).amplitude;
    }

    std::vector<double> time, y_in, y_out, pressure, q_in, q_out;
    double peak_q = 0.0;
    double mean_q = 0.0;
    double amp_in = 0.0;
    double amp_out = 0.0;
};

/// Smallest p such that the last p cycles repeat the p before them, or 0.
/// Impacting valves can settle onto period-2 (or longer) orbits, so a
/// single-cycle comparison would never converge there.
int detect_period(const std::deque<CycleRecord>& history, double tol) {
    for (std::size_t p = 1; p <= kMaxResponseCycles && 2 * p <= history.size(); ++p) {
        double mean_q = 0.0;
        double peak_q = 0.0;
        for (std::size_t j = history.size() - p; j < history.size(); ++j) {
            mean_q += history[j].mean_q / static_cast<double>(p);
            peak_q = std::max(peak_q, history[j].peak_q);
        }
        const double q_scale = std::max(std::abs(mean_q), 1e-3 * peak_q);
        bool repeats = true;
        for (std::size_t j = history.size() - p; j < history.size() && repeats; ++j) {
            const auto& now = history[j];
            const auto& before = history[j - p];
            repeats = settled(now.mean_q, before.mean_q, q_scale, tol) &&
                      settled(now.amp_in, before.amp_in, now.amp_in, tol) &&
                      settled(now.amp_out, before.amp_out, now.amp_out, tol);
        }
        if (repeats) return static_cast<int>(p);
    }
    return 0;
}

}  // namespace

Fundamental fundamental(const std::vector<double>& samples, int cycles) {
    Fundamental result;
    const std::size_t n = samples.size();
    if (n == 0) return result;
    double a = 0.0;
    double b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double theta =
            2.0 * std::numbers::pi * static_cast<double>(cycles) * static_cast<double>(k) / static_cast<double>(n);
        a += samples[k] * std::sin(theta);
        b += samples[k] * std::cos(theta);
    }
    a *= 2.0 / static_cast<double>(n);
    b *= 2.0 / static_cast<double>(n);
    // y = A sin(theta - phi)  =>  a = A cos(phi), b = -A sin(phi)
    result.amplitude = std::hypot(a, b);
    result.phase_lag = std::atan2(-b, a);
    return result;
}

double backflow_fraction(const std::vector<double>& q_out) {
    double back = 0.0;
    double total = 0.0;
    for (double q : q_out) {
        back += std::max(0.0, -q);
        total += std::abs(q);
    }
    return total > 0.0 ? back / total : 0.0;
}

SimResult simulate(const PumpConfig& config, const SimOptions& options) {
    config.validate();
    if (options.max_cycles < 2) throw InvalidSpec("max_cycles", "must be at least 2");
    detail::require_positive(options.convergence_tol, "convergence_tol");

    const double period = config.drive.period();
    int steps = options.steps_per_cycle;
    if (options.dt > 0.0) {
        if (options.dt >= period / 50.0) {
            throw InvalidSpec("dt", "time step must be below 1/(50 f) = " + std::to_string(period / 50.0) + " s");
        }
        // period / (period / n) can land a hair above n.
        steps = static_cast<int>(std::ceil(period / options.dt * (1.0 - 1e-12)));
    } else if (steps < 51) {
        throw InvalidSpec("steps_per_cycle", "must exceed 50 so that dt < 1/(50 f)");
    }
    const double dt = period / steps;

    const PumpModel model(config, options);
    const bool contact = options.seat_contact && options.check_valves;
    const double lift_in = config.inlet_valve.max_lift;
    const double lift_out = config.outlet_valve.max_lift;
    ValveState in;
    ValveState out;
    double min_opening = std::numeric_limits<double>::infinity();
    double residual = 0.0;
    std::deque<CycleRecord> history;
    int response_cycles = 0;
    int cycles_run = 0;

    for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
        const double cycle_start = cycle * period;
        CycleRecord rec(static_cast<std::size_t>(steps));
        for (int k = 0; k < steps; ++k) {
            // The forcing is periodic, so time within the cycle is enough.
            const double tau = k * dt;
            const auto i = static_cast<std::size_t>(k);
            const auto f = model.ports(tau, in.y, out.y);
            rec.time[i] = cycle_start + tau;
            rec.y_in[i] = in.y;
            rec.y_out[i] = out.y;
            rec.pressure[i] = f.pressure;
            rec.q_in[i] = f.q_in;
            rec.q_out[i] = f.q_out;
            rec.peak_q = std::max(rec.peak_q, std::abs(f.q_out));
            const double dvdt = model.volume_rate(tau);
            const double scale = std::max({std::abs(f.q_in), std::abs(f.q_out), std::abs(dvdt),
                                           std::numeric_limits<double>::min()});
            residual = std::max(residual, std::abs(f.q_in - f.q_out - dvdt) / scale);
            min_opening = std::min({min_opening, in.y, out.y});

            double t = tau;
            double remaining = dt;
            int substeps = 0;
            while (remaining > 0.0) {
                double h = std::min(remaining, kStabilityFraction / model.stiffness_rate(t, in, out));
                if (remaining - h < 1e-9 * dt) h = remaining;
                if (++substeps > kMaxSubsteps) {
                    throw NumericalError("valve dynamics too stiff: substep limit exceeded at t = " +
                                         std::to_string(cycle_start + t) + " s");
                }
                model.rk4(t, h, in, out);
                t += h;
                remaining -= h;
                if (contact) {
                    clamp_to_stops(in, lift_in);
                    clamp_to_stops(out, lift_out);
                }
                if (!std::isfinite(in.y) || !std::isfinite(out.y)) {
                    throw NumericalError("valve state became non-finite at t = " +
                                         std::to_string(cycle_start + t) + " s");
                }
            }
        }
        rec.summarize();

        history.push_back(std::move(rec));
        if (history.size() > 2 * kMaxResponseCycles) history.pop_front();
        cycles_run = cycle + 1;
        response_cycles = detect_period(history, options.convergence_tol);
        if (response_cycles > 0) break;
    }

    const bool converged = response_cycles > 0;
    if (!converged) response_cycles = 1;

    SimResult r;
    r.frequency = config.drive.frequency;
    r.period = period;
    r.cycles = cycles_run;
    r.converged = converged;
    r.response_cycles = response_cycles;
    const auto first = history.end() - response_cycles;
    for (auto it = first; it != history.end(); ++it) {
        r.time.insert(r.time.end(), it->time.begin(), it->time.end());
        r.y_in.insert(r.y_in.end(), it->y_in.begin(), it->y_in.end());
        r.y_out.insert(r.y_out.end(), it->y_out.begin(), it->y_out.end());
        r.chamber_pressure.insert(r.chamber_pressure.end(), it->pressure.begin(), it->pressure.end());
        r.q_in.insert(r.q_in.end(), it->q_in.begin(), it->q_in.end());
        r.q_out.insert(r.q_out.end(), it->q_out.begin(), it->q_out.end());
    }

    r.net_flow_rate = net_flow_rate(r);
    r.backflow_fraction = backflow_fraction(r.q_out);
    const auto fout = fundamental(r.y_out, response_cycles);
    r.outlet_amplitude = fout.amplitude;
    r.outlet_phase_lag = fout.phase_lag;
    // The inlet is driven by -sin(w t); report its lag behind its own forcing.
    std::vector<double> neg_in(r.y_in.size());
    std::transform(r.y_in.begin(), r.y_in.end(), neg_in.begin(), [](double y) { return -y; });
    const auto fin = fundamental(neg_in, response_cycles);
    r.inlet_amplitude = fin.amplitude;
    r.inlet_phase_lag = fin.phase_lag;
    r.min_opening = min_opening;
    r.max_continuity_residual = residual;
    return r;
}

double net_flow_rate(const SimResult& result) {
    if (result.q_out.empty()) throw InvalidSpec("q_out", "empty time series");
    double sum = 0.0;
    for (double q : result.q_out) sum += q;
    return sum / static_cast<double>(result.q_out.size());
}

ActuationDiagnosis diagnose_actuation(const SimResult& result) {
    ActuationDiagnosis d;
    const double q_net = net_flow_rate(result);
    d.backflow_fraction = backflow_fraction(result.q_out);
    d.outlet_phase_lag = fundamental(result.y_out, std::max(result.response_cycles, 1)).phase_lag;
    d.classification = (d.backflow_fraction > 0.25 || q_net <= 0.0) ? Actuation::Abnormal : Actuation::Normal;
    return d;
}

void write_sim_csv(std::ostream& out, const SimResult& result) {
    out << "t,y_in,y_out,p_chamber,q_in,q_out\n";
    const auto old_precision = out.precision(17);
    for (std::size_t i = 0; i < result.time.size(); ++i) {
        out << result.time[i] << ',' << result.y_in[i] << ',' << result.y_out[i] << ','
            << result.chamber_pressure[i] << ',' << result.q_in[i] << ',' << result.q_out[i] << '\n';
    }
    out.precision(old_precision);
}

}  // namespace micropump
