#include "micropump/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "micropump/csv.hpp"
#include "micropump/errors.hpp"
#include "micropump/hydraulics.hpp"
#include "micropump/performance.hpp"
#include "micropump/pump_dynamics.hpp"
#include "micropump/repro.hpp"
#include "micropump/run_config.hpp"
#include "micropump/thermal_loop.hpp"
#include "micropump/valve_mechanics.hpp"

namespace micropump {

namespace {

namespace fs = std::filesystem;

// Ten significant digits for the terminal; files keep every digit.
std::string show(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

struct Globals {
    std::string config_path;
    std::string out_dir = "micropump_out";
    std::string format = "csv";
    std::uint64_t seed = 20240101;
};

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InvalidSpec("--out", "cannot write " + (dir / name).string());
    return out;
}

class Session {
public:
    Session(const Globals& g, std::ostream& out) : globals_(g), out_(out) {
        if (g.format != "csv") throw InvalidSpec("--format", "only csv is supported");
        config_ = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
        config_.validate();
        dir_ = g.out_dir;
        fs::create_directories(dir_);
        auto dump = open_output(dir_, "resolved_config.txt");
        dump << "# micropump " << kToolVersion << " config=" << hex_hash(config_hash(config_)) << '\n'
             << dump_run_config(config_);
    }

    RunConfig& config() { return config_; }
    const fs::path& dir() const { return dir_; }
    std::uint64_t hash() const { return config_hash(config_); }
    std::ostream& out() { return out_; }
    std::uint64_t seed() const { return globals_.seed; }

    std::ofstream csv(const std::string& name) {
        auto f = open_output(dir_, name);
        write_provenance(f, hash());
        return f;
    }

private:
    const Globals& globals_;
    std::ostream& out_;
    RunConfig config_;
    fs::path dir_;
};

void cmd_mech(Session& s, const std::string& which) {
    if (which != "inlet" && which != "outlet") throw InvalidSpec("--valve", "expected inlet or outlet");
    const auto& valve = which == "inlet" ? s.config().pump.inlet_valve : s.config().pump.outlet_valve;
    const auto p = derive_lumped_params(valve.spec, valve.damping_coefficient);
    auto describe = [&](std::string (*fmt)(double)) {
        std::ostringstream text;
        text << "valve = " << which << " (" << to_string(valve.spec.shape) << ")\n"
             << "I = " << fmt(p.second_moment) << " m^4\n"
             << "k = " << fmt(p.spring_constant) << " N/m\n"
             << "m = " << fmt(p.mass) << " kg\n"
             << "omega_n = " << fmt(p.natural_frequency) << " rad/s\n"
             << "c = " << fmt(p.damping_coefficient) << " N s/m\n"
             << "zeta = " << fmt(p.damping_factor) << '\n';
        return text.str();
    };
    s.out() << describe(show);
    auto f = open_output(s.dir(), "mech.txt");
    f << describe(format_double);
}

void cmd_sim(Session& s, std::optional<double> frequency) {
    PumpConfig cfg = s.config().pump;
    if (frequency) cfg.drive.frequency = *frequency;
    const auto r = simulate(cfg, s.config().solver);
    {
        auto f = s.csv("sim.csv");
        write_sim_csv(f, r);
    }
    const auto d = diagnose_actuation(r);
    s.out() << "frequency = " << show(r.frequency) << " Hz\n"
            << "net_flow = " << show(r.net_flow_ml_per_min()) << " ml/min\n"
            << "backflow_fraction = " << show(r.backflow_fraction) << '\n'
            << "actuation = " << (d.classification == Actuation::Normal ? "normal" : "abnormal") << '\n'
            << "cycles = " << r.cycles << " (response period " << r.response_cycles << " cycle(s), "
            << (r.converged ? "converged" : "not converged") << ")\n";
}

void cmd_sweep(Session& s, const std::vector<double>& voltages) {
    PumpConfig cfg = s.config().pump;
    auto curve = frequency_sweep(cfg, s.config().sweep, s.config().solver);
    curve.peaks = find_peaks(curve);
    {
        auto f = open_output(s.dir(), "sweep.csv");
        write_flow_curve(f, curve, s.hash());
    }
    for (const auto& p : curve.points) {
        s.out() << show(p.frequency) << " Hz  " << show(p.flow_ml_per_min) << " ml/min"
                << (p.abnormal ? "  (abnormal)" : "") << '\n';
    }
    for (const auto& p : curve.peaks) {
        s.out() << "peak " << show(p.frequency) << " Hz  " << show(p.flow_ml_per_min) << " ml/min\n";
    }
    if (!voltages.empty()) {
        for (double v : voltages) {
            if (!(v >= 0.0)) throw InvalidSpec("--voltages", "voltages must be non-negative");
        }
        const auto response = voltage_response(cfg, voltages, cfg.drive.frequency, s.config().solver);
        auto f = s.csv("voltage.csv");
        f << "voltage_v,flow_ml_per_min\n";
        for (const auto& p : response) {
            f << format_double(p.voltage) << ',' << format_double(p.flow_ml_per_min) << '\n';
            s.out() << show(p.voltage) << " V  " << show(p.flow_ml_per_min) << " ml/min\n";
        }
    }
}

SystemCurve system_curve(const RunConfig& c) {
    const bool any = c.system_pump_internal > 0.0 || c.system_coldplate > 0.0 || c.system_pipe_other > 0.0;
    if (!any) return {};
    c.require({"pipe.area_m2"});
    return SystemCurve::from_velocity_coefficients(c.system_pump_internal, c.system_coldplate, c.system_pipe_other,
                                                   *c.pipe_area);
}

void cmd_pq(Session& s, std::optional<double> head) {
    const auto& c = s.config();
    const auto pump = PumpCurve::from_ml_per_min(c.pump_shutoff_head, c.pump_max_flow_ml_per_min);
    {
        auto f = s.csv("pq.csv");
        f << "head_m,flow_ml_per_min\n";
        for (int i = 0; i <= 20; ++i) {
            const double h = pump.shutoff_head() * i / 20.0;
            f << format_double(h) << ',' << format_double(to_ml_per_min(pump.flow_at(h))) << '\n';
        }
    }
    s.out() << "pump line: " << show(c.pump_shutoff_head) << " m shutoff, "
            << show(c.pump_max_flow_ml_per_min) << " ml/min free flow\n";
    if (head) {
        s.out() << "Q(" << show(*head) << " m) = " << show(to_ml_per_min(pump.flow_at(*head)))
                << " ml/min\n";
    }
    const auto system = system_curve(c);
    const auto op = operating_point(pump, system);
    s.out() << "operating point: Q = " << show(to_ml_per_min(op.flow)) << " ml/min, H = "
            << show(op.head) << " m\n";
}

void cmd_loss(Session& s, const std::string& samples_path, std::optional<double> total, double coldplate,
              double pipe_other, std::optional<double> elevation, double velocity) {
    if (samples_path.empty() && !total && !elevation) {
        throw InvalidSpec("loss", "give --samples, --total or --elevation");
    }
    const auto& c = s.config();
    if (elevation) {
        const auto h = total_head_loss(*elevation, velocity, c.pump.fluid.gravity);
        s.out() << "head_loss = " << show(h.head) << " m"
                << (h.negative_loss ? "  (negative: check elevation and velocity)" : "") << '\n';
    }
    if (total) {
        const double pump = decompose_pump_resistance(*total, coldplate, pipe_other);
        s.out() << "pump_head_loss = " << show(pump) << " m\n";
    }
    if (!samples_path.empty()) {
        const auto samples = read_head_loss_samples(read_csv_file(samples_path));
        const auto fit = fit_linear_loss(samples);
        s.out() << "coefficient = " << show(fit.coefficient) << " m per m/s\n"
                << "rms_residual = " << show(fit.rms_residual) << " m\n";
        if (c.pipe_area) {
            s.out() << "coefficient_per_flow = " << show(fit.coefficient / *c.pipe_area)
                    << " m per m^3/s\n";
        }
        auto f = s.csv("loss_fit.csv");
        f << "velocity_m_per_s,head_m,fitted_head_m\n";
        for (const auto& p : samples) {
            f << format_double(p.velocity) << ',' << format_double(p.head) << ','
              << format_double(fit.coefficient * p.velocity) << '\n';
        }
    }
}

void cmd_thermal(Session& s, const std::string& points_path, const std::vector<double>& powers) {
    const auto& c = s.config();
    const std::vector<PowerTemperature> points = points_path.empty()
                                                     ? std::vector<PowerTemperature>{c.thermal_low, c.thermal_high}
                                                     : read_thermal_points(read_csv_file(points_path));
    const auto model = fit_thermal_model(points);
    s.out() << "offset = " << show(model.offset) << " C\n"
            << "slope = " << show(model.slope) << " K/W\n";
    std::vector<double> query = powers;
    if (query.empty()) {
        for (int i = 0; i <= 6; ++i) query.push_back(model.power_min + (model.power_max - model.power_min) * i / 6.0);
    }
    auto f = s.csv("thermal.csv");
    f << "power_w,core_temp_c\n";
    for (double p : query) {
        const auto t = core_temperature(model, p);
        f << format_double(p) << ',' << format_double(t.temperature) << '\n';
        s.out() << "T(" << show(p) << " W) = " << show(t.temperature) << " C"
                << (t.extrapolated ? "  (extrapolated)" : "") << '\n';
    }
}

void cmd_calibrate(Session& s, const std::string& measured_path, std::optional<int> budget) {
    const auto& c = s.config();
    const auto measured = read_flow_curve(read_csv_file(measured_path));
    CalibrationOptions options;
    options.sim.dt = c.solver.dt;
    options.sim.steps_per_cycle = c.solver.steps_per_cycle;
    options.sim.convergence_tol = c.solver.convergence_tol;
    options.sim.check_valves = c.solver.check_valves;
    options.sim.seat_contact = c.solver.seat_contact;
    options.grid_points = c.calibration_grid_points;
    options.grid_decades = c.calibration_grid_decades;
    const auto result = calibrate(measured, c.pump, c.calibration_seed, budget.value_or(c.calibration_budget), options);
    {
        auto f = open_output(s.dir(), "calibration.txt");
        write_calibration_result(f, result);
    }
    PumpConfig fitted = c.pump;
    result.params.apply_to(fitted);
    std::vector<double> freqs;
    for (const auto& p : measured.points) freqs.push_back(p.frequency);
    auto curve = frequency_sweep(fitted, freqs, options.sim);
    {
        auto f = open_output(s.dir(), "calibrated_sweep.csv");
        RunConfig rc = c;
        rc.pump = fitted;
        write_flow_curve(f, curve, config_hash(rc));
    }
    std::ostringstream text;
    write_calibration_result(text, result);
    s.out() << text.str();
}

int cmd_repro(Session& s, const std::string& digitized, std::optional<int> budget) {
    ReproOptions options;
    options.out_dir = s.dir() / "repro";
    options.seed = s.seed();
    if (!digitized.empty()) options.digitized_curve = digitized;
    if (budget) options.calibration_budget = *budget;
    const auto rows = run_repro(options);
    s.out() << format_report(rows, true);
    return any_failed(rows) ? kExitNumerical : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Micro-pump valve dynamics, performance and calibration toolkit", "micropump"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Run configuration (key = value)");
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--format", g.format, "Data format (csv)")->capture_default_str();
    app.add_option("--seed", g.seed, "Seed for synthetic-data noise")->capture_default_str();

    auto* mech = app.add_subcommand("mech", "Lumped valve parameters");
    std::string valve = "inlet";
    mech->add_option("--valve", valve, "inlet or outlet")->capture_default_str();

    auto* sim = app.add_subcommand("sim", "One simulation, time series to sim.csv");
    std::optional<double> sim_frequency;
    sim->add_option("--frequency", sim_frequency, "Drive frequency override (Hz)");

    auto* sweep = app.add_subcommand("sweep", "Flow-frequency sweep to sweep.csv");
    std::vector<double> voltages;
    sweep->add_option("--voltages", voltages, "Also sweep these voltages at drive.frequency_hz")->delimiter(',');

    auto* pq = app.add_subcommand("pq", "Pump P-Q line and operating point");
    std::optional<double> head;
    pq->add_option("--head", head, "Query flow at this head (m)");

    auto* loss = app.add_subcommand("loss", "Head-loss fit and decomposition");
    std::string samples;
    std::optional<double> total;
    double coldplate = 0.0;
    double pipe_other = 0.0;
    std::optional<double> elevation;
    double velocity = 0.0;
    loss->add_option("--samples", samples, "CSV velocity_m_per_s,head_m");
    loss->add_option("--total", total, "Total head loss (m)");
    loss->add_option("--coldplate", coldplate, "Cold-plate head loss (m)");
    loss->add_option("--pipe-other", pipe_other, "Pipe and fitting head loss (m)");
    loss->add_option("--elevation", elevation, "Reservoir elevation z1 (m)");
    loss->add_option("--velocity", velocity, "Outlet velocity V2 (m/s)");

    auto* thermal = app.add_subcommand("thermal", "Core temperature model");
    std::string points;
    std::vector<double> powers;
    thermal->add_option("--points", points, "CSV power_w,core_temp_c (two rows)");
    thermal->add_option("--power", powers, "Query powers (W)")->delimiter(',');

    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit damping and drive constants to a measured curve");
    std::string measured;
    std::optional<int> budget;
    calibrate_cmd->add_option("--measured", measured, "CSV frequency_hz,flow_ml_per_min")->required();
    calibrate_cmd->add_option("--budget", budget, "Objective evaluations");

    auto* repro = app.add_subcommand("repro", "Run the acceptance checks and print a pass/fail table");
    std::string digitized;
    std::optional<int> repro_budget;
    repro->add_option("--digitized", digitized, "Digitized flow-frequency CSV for the resonance check");
    repro->add_option("--budget", repro_budget, "Calibration evaluations");

    if (args.empty()) {
        err << app.help();
        return kExitInvalid;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitInvalid;
    }

    try {
        Session s(g, out);
        if (*mech) cmd_mech(s, valve);
        if (*sim) cmd_sim(s, sim_frequency);
        if (*sweep) cmd_sweep(s, voltages);
        if (*pq) cmd_pq(s, head);
        if (*loss) cmd_loss(s, samples, total, coldplate, pipe_other, elevation, velocity);
        if (*thermal) cmd_thermal(s, points, powers);
        if (*calibrate_cmd) cmd_calibrate(s, measured, budget);
        if (*repro) return cmd_repro(s, digitized, repro_budget);
        return kExitOk;
    } catch (const InvalidSpec& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace micropump
