#include "micropump/repro.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>

#include "micropump/csv.hpp"
#include "micropump/errors.hpp"
#include "micropump/hydraulics.hpp"
#include "micropump/performance.hpp"
#include "micropump/pump_dynamics.hpp"
#include "micropump/run_config.hpp"
#include "micropump/thermal_loop.hpp"
#include "micropump/valve_mechanics.hpp"

namespace micropump {

namespace {

constexpr double kPi = 3.14159265358979323846;

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string sci(double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InvalidSpec((dir / name).string(), "cannot write output file");
    return out;
}

std::uint64_t hash_of(const PumpConfig& pump) {
    RunConfig rc;
    rc.pump = pump;
    return config_hash(rc);
}

CriterionResult formula_fidelity(const std::filesystem::path& dir) {
    CriterionResult r{"AC1", "lumped valve parameters", CriterionStatus::Pass, "", 0.0};
    const auto p = derive_lumped_params(ValveSpec::preset(ValveShape::Standard), 2.0e-3);
    const double k_hand = 0.5625;
    const double m_hand = 7.275e-6;
    const double checks[][2] = {{p.second_moment, 3.125e-14},
                                {p.spring_constant, k_hand},
                                {p.mass, m_hand},
                                {p.natural_frequency, std::sqrt(k_hand / m_hand)}};
    double worst = 0.0;
    for (const auto& c : checks) worst = std::max(worst, rel_err(c[0], c[1]));
    const bool quoted = std::abs(p.natural_frequency - 278.06) < 0.005;
    r.status = worst <= 1e-12 && quoted ? CriterionStatus::Pass : CriterionStatus::Fail;
    r.detail = "max rel err " + sci(worst) + " (tol 1e-12), omega_n = " + format_double(p.natural_frequency) + " rad/s";

    auto out = open_out(dir, "ac1_mech.txt");
    out << "second_moment_m4 = " << format_double(p.second_moment) << '\n'
        << "spring_constant_n_per_m = " << format_double(p.spring_constant) << '\n'
        << "mass_kg = " << format_double(p.mass) << '\n'
        << "natural_frequency_rad_per_s = " << format_double(p.natural_frequency) << '\n';
    return r;
}

CriterionResult oscillator_oracle(const std::filesystem::path& dir) {
    CriterionResult r{"AC2", "contact-free oscillator vs closed form", CriterionStatus::Pass, "", 0.0};
    auto out = open_out(dir, "ac2_oscillator.csv");
    write_provenance(out, hash_of(PumpConfig::defaults()));
    out << "damping_factor,frequency_ratio,amplitude_m,amplitude_exact_m,phase_rad,phase_exact_rad\n";

    const auto spec = ValveSpec::preset(ValveShape::Standard);
    double worst = 0.0;
    for (double zeta : {0.1, 0.5, 1.0, 2.0}) {
        for (double ratio : {0.5, 1.0, 2.0}) {
            PumpConfig cfg = PumpConfig::defaults();
            cfg.inlet_valve.spec = spec;
            cfg.outlet_valve.spec = spec;
            const double c = damping_for_factor(spec, zeta);
            cfg.inlet_valve.damping_coefficient = c;
            cfg.outlet_valve.damping_coefficient = c;
            const auto params = derive_lumped_params(spec, c);
            const double omega = ratio * params.natural_frequency;
            cfg.drive.frequency = omega / (2.0 * kPi);

            SimOptions opts;
            opts.seat_contact = false;
            opts.convergence_tol = 1e-11;
            opts.max_cycles = 4000;
            const auto sim = simulate(cfg, opts);
            const double amp = steady_state_amplitude(params, cfg.drive.force_amplitude(), omega);
            const double phase = steady_state_phase(params, omega);
            const double e = std::max(rel_err(sim.outlet_amplitude, amp), rel_err(sim.outlet_phase_lag, phase));
            worst = std::max(worst, sim.converged ? e : std::numeric_limits<double>::infinity());
            out << format_double(zeta) << ',' << format_double(ratio) << ',' << format_double(sim.outlet_amplitude)
                << ',' << format_double(amp) << ',' << format_double(sim.outlet_phase_lag) << ','
                << format_double(phase) << '\n';
        }
    }
    r.status = worst <= 1e-6 ? CriterionStatus::Pass : CriterionStatus::Fail;
    r.detail = "12 cases, max rel err " + sci(worst) + " (tol 1e-6)";
    return r;
}

CriterionResult rectification(const std::filesystem::path& dir) {
    CriterionResult r{"AC3", "check-valve rectification", CriterionStatus::Pass, "", 0.0};
    const PumpConfig cfg = PumpConfig::defaults();
    const SweepSpec sweep;
    const auto freqs = sweep.frequencies();
    const auto flows = simulate_flows(cfg, freqs);

    SimOptions open;
    open.check_valves = false;
    auto out = open_out(dir, "ac3_rectification.csv");
    write_provenance(out, hash_of(cfg));
    out << "frequency_hz,flow_ml_per_min,open_flow_ml_per_min,open_peak_q_out_ml_per_min\n";
    double min_q = std::numeric_limits<double>::infinity();
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        PumpConfig c = cfg;
        c.drive.frequency = freqs[i];
        const auto sim = simulate(c, open);
        double peak = 0.0;
        for (double q : sim.q_out) peak = std::max(peak, std::abs(q));
        const double ratio = std::abs(sim.net_flow_rate) / peak;
        worst_ratio = std::max(worst_ratio, ratio);
        min_q = std::min(min_q, flows[i]);
        out << format_double(freqs[i]) << ',' << format_double(flows[i]) << ','
            << format_double(sim.net_flow_ml_per_min()) << ',' << format_double(to_ml_per_min(peak)) << '\n';
    }
    r.status = min_q > 0.0 && worst_ratio < 1e-3 ? CriterionStatus::Pass : CriterionStatus::Fail;
    r.detail = "min Q_net " + format_double(std::round(min_q * 1000.0) / 1000.0) +
               " ml/min over 70-180 Hz; open-port |Q_net|/peak " + sci(worst_ratio) + " (tol 1e-3)";
    return r;
}

CriterionResult pq_reproduction(const std::filesystem::path& dir, std::uint64_t seed) {
    CriterionResult r{"AC4", "pump P-Q line and operating point", CriterionStatus::Pass, "", 0.0};
    const auto pump = PumpCurve::from_ml_per_min(0.52, 72.0);
    const double q_half = to_ml_per_min(pump.flow_at(0.26));
    const double q_err = rel_err(q_half, 36.0);

    std::mt19937_64 rng(seed);
    // System slopes from 1e-5 to 1e-1 m per (ml/min), log-uniform.
    std::uniform_real_distribution<double> exponent(-5.0, -1.0);
    double worst = 0.0;
    auto out = open_out(dir, "ac4_operating_points.csv");
    write_provenance(out, hash_of(PumpConfig::defaults()));
    out << "system_m_per_ml_per_min,flow_ml_per_min,head_m\n";
    for (int i = 0; i < 100; ++i) {
        const double per_ml = std::pow(10.0, exponent(rng));
        SystemCurve system{per_ml * kMlPerMinPerM3PerS, 0.0, 0.0};
        const auto op = operating_point(pump, system);
        const double pump_head = pump.shutoff_head() * (1.0 - op.flow / pump.max_flow());
        const double system_head = system.total() * op.flow;
        worst = std::max({worst, std::abs(op.head - pump_head) / op.head, std::abs(op.head - system_head) / op.head});
        out << format_double(per_ml) << ',' << format_double(to_ml_per_min(op.flow)) << ',' << format_double(op.head)
            << '\n';
    }
    r.status = q_err <= 1e-12 && worst <= 1e-9 ? CriterionStatus::Pass : CriterionStatus::Fail;
    r.detail = "Q(0.26 m) = " + format_double(q_half) + " ml/min; 100 operating points, max rel residual " +
               sci(worst) + " (tol 1e-9)";
    return r;
}

// The asymmetric round-trip pump: a 3 mm inlet flap and the 2 mm default
// outlet. With identical flaps the net flow is unchanged when the two
// damping constants are swapped, so they could not be told apart.
PumpConfig round_trip_truth() {
    PumpConfig cfg = PumpConfig::defaults();
    cfg.inlet_valve.spec = ValveSpec::preset(ValveShape::Standard);
    return cfg;
}

CalibrationParams round_trip_seed(const CalibrationParams& truth) {
    return {truth.inlet_damping * 1.15, truth.outlet_damping * 0.87, truth.force_per_volt * 1.04,
            truth.stroke_volume_per_volt * 1.4};
}

CriterionResult calibration_round_trip(const std::filesystem::path& dir, std::uint64_t seed, int budget) {
    CriterionResult r{"AC5", "calibration round trip", CriterionStatus::Pass, "", 0.0};
    const auto truth_cfg = round_trip_truth();
    const auto truth = CalibrationParams::from_config(truth_cfg);
    const auto start = round_trip_seed(truth);
    const auto clean = frequency_sweep(truth_cfg, SweepSpec{});

    FlowFrequencyCurve noisy = clean;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.03, 0.03);
    for (auto& p : noisy.points) p.flow_ml_per_min *= 1.0 + noise(rng);
    noisy.peaks.clear();

    const auto hash = hash_of(truth_cfg);
    auto write_data = [&](const std::string& name, const FlowFrequencyCurve& curve) {
        auto out = open_out(dir, name);
        write_flow_curve(out, curve, hash);
    };
    write_data("ac5_measured_noiseless.csv", clean);
    write_data("ac5_measured_noisy.csv", noisy);

    auto worst_ratio = [&](const CalibrationParams& p) {
        return std::max({rel_err(p.inlet_damping, truth.inlet_damping), rel_err(p.outlet_damping, truth.outlet_damping),
                         rel_err(p.force_per_volt, truth.force_per_volt),
                         rel_err(p.stroke_volume_per_volt, truth.stroke_volume_per_volt)});
    };

    const auto fit_clean = calibrate(clean, truth_cfg, start, budget);
    const auto fit_noisy = calibrate(noisy, truth_cfg, start, budget);
    {
        auto out = open_out(dir, "ac5_calibration_noiseless.txt");
        write_calibration_result(out, fit_clean);
    }
    {
        auto out = open_out(dir, "ac5_calibration_noisy.txt");
        write_calibration_result(out, fit_noisy);
    }

    double scale = 0.0;
    for (const auto& p : clean.points) scale += p.flow_ml_per_min * p.flow_ml_per_min;
    const double e_clean = worst_ratio(fit_clean.params);
    const double e_noisy = worst_ratio(fit_noisy.params);
    const bool ok = e_clean <= 0.01 && fit_clean.objective < 1e-6 * scale && e_noisy <= 0.10 &&
                    fit_clean.objective <= fit_clean.seed_objective && fit_noisy.objective <= fit_noisy.seed_objective;
    r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
    r.detail = "noiseless max param err " + sci(e_clean) + " (tol 1e-2), objective " + sci(fit_clean.objective) +
               "; +/-3% noise max param err " + sci(e_noisy) + " (tol 1e-1)";
    return r;
}

CriterionResult resonance_targets(const std::filesystem::path& dir, const ReproOptions& options) {
    CriterionResult r{"AC6", "resonance peaks near 130 and 180 Hz", CriterionStatus::Skipped, "", 0.0};
    if (!options.digitized_curve) {
        r.detail = "no digitized flow-frequency data supplied; AC5 stands in";
        return r;
    }
    const auto measured = read_flow_curve(read_csv_file(*options.digitized_curve));
    const PumpConfig cfg = PumpConfig::defaults();
    const RunConfig defaults;
    const auto fit = calibrate(measured, cfg, defaults.calibration_seed, options.calibration_budget);
    PumpConfig fitted = cfg;
    fit.params.apply_to(fitted);
    auto curve = frequency_sweep(fitted, SweepSpec{});
    curve.peaks = find_peaks(curve);
    {
        auto out = open_out(dir, "ac6_calibration.txt");
        write_calibration_result(out, fit);
    }
    {
        auto out = open_out(dir, "ac6_fitted_sweep.csv");
        write_flow_curve(out, curve, hash_of(fitted));
    }
    bool ok = curve.peaks.size() >= 2;
    if (ok) {
        const double a = std::min(curve.peaks[0].frequency, curve.peaks[1].frequency);
        const double b = std::max(curve.peaks[0].frequency, curve.peaks[1].frequency);
        ok = std::abs(a - 130.0) <= 10.0 && std::abs(b - 180.0) <= 10.0;
        r.detail = "top peaks at " + format_double(a) + " and " + format_double(b) + " Hz (tol 10 Hz)";
    } else {
        r.detail = "fewer than two peaks in the fitted sweep";
    }
    r.status = ok ? CriterionStatus::Pass : CriterionStatus::Fail;
    return r;
}

CriterionResult thermal(const std::filesystem::path& dir) {
    CriterionResult r{"AC7", "thermal interpolation and monotonicity", CriterionStatus::Pass, "", 0.0};
    const std::vector<PowerTemperature> pts{{30.0, 48.0}, {60.0, 73.6}};
    const auto model = fit_thermal_model(pts);
    const bool exact = core_temperature(model, 30.0).temperature == 48.0 &&
                       core_temperature(model, 60.0).temperature == 73.6;
    auto out = open_out(dir, "ac7_thermal.csv");
    write_provenance(out, hash_of(PumpConfig::defaults()));
    out << "power_w,core_temp_c\n";
    bool increasing = true;
    double previous = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 300; ++i) {
        const double p = 30.0 + 0.1 * i;
        const double t = core_temperature(model, p).temperature;
        increasing = increasing && t > previous;
        previous = t;
        if (i % 50 == 0) out << format_double(p) << ',' << format_double(t) << '\n';
    }
    r.status = exact && increasing ? CriterionStatus::Pass : CriterionStatus::Fail;
    r.detail = std::string(exact ? "both points reproduced exactly" : "fit points not reproduced") +
               ", slope " + format_double(model.slope) + " K/W, " +
               (increasing ? "strictly increasing on [30, 60] W" : "not monotone");
    return r;
}

CriterionResult thickness_trend(const std::filesystem::path& dir) {
    CriterionResult r{"AC8", "amplitude falls with valve thickness", CriterionStatus::Pass, "", 0.0};
    const double force = 0.01;
    const double c = 2.0e-3;
    const double omega = 2.0 * kPi * 130.0;
    auto out = open_out(dir, "ac8_amplitude.csv");
    write_provenance(out, hash_of(PumpConfig::defaults()));
    out << "thickness_m,amplitude_m\n";
    bool decreasing = true;
    double previous = std::numeric_limits<double>::infinity();
    std::string list;
    for (double h : {0.3e-3, 0.5e-3, 0.8e-3, 1.0e-3}) {
        const auto params = derive_lumped_params(ValveSpec::preset(ValveShape::Standard, h), c);
        const double a = steady_state_amplitude(params, force, omega);
        decreasing = decreasing && a < previous;
        previous = a;
        out << format_double(h) << ',' << format_double(a) << '\n';
        list += (list.empty() ? "" : ", ") + sci(a);
    }
    r.status = decreasing ? CriterionStatus::Pass : CriterionStatus::Fail;
    r.detail = "amplitudes " + list + " m at h = 0.3, 0.5, 0.8, 1.0 mm";
    return r;
}

CriterionResult timed(const std::function<CriterionResult()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r.status = CriterionStatus::Fail;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace

std::string_view to_string(CriterionStatus status) {
    switch (status) {
        case CriterionStatus::Pass: return "PASS";
        case CriterionStatus::Fail: return "FAIL";
        case CriterionStatus::Skipped: return "SKIPPED";
    }
    return "?";
}

std::vector<CriterionResult> run_criteria(const ReproOptions& options) {
    const auto& dir = options.out_dir;
    std::filesystem::create_directories(dir);
    std::vector<CriterionResult> rows;
    auto add = [&](const char* id, const char* title, const std::function<CriterionResult()>& body) {
        auto r = timed(body);
        r.id = id;
        if (r.title.empty()) r.title = title;
        rows.push_back(std::move(r));
    };
    add("AC1", "lumped valve parameters", [&] { return formula_fidelity(dir); });
    add("AC2", "contact-free oscillator vs closed form", [&] { return oscillator_oracle(dir); });
    add("AC3", "check-valve rectification", [&] { return rectification(dir); });
    add("AC4", "pump P-Q line and operating point", [&] { return pq_reproduction(dir, options.seed); });
    add("AC5", "calibration round trip", [&] {
        auto r = calibration_round_trip(dir, options.seed, options.calibration_budget);
        return r;
    });
    if (rows.back().status == CriterionStatus::Pass && rows.back().seconds >= 600.0) {
        rows.back().status = CriterionStatus::Fail;
        rows.back().detail += "; exceeded 10 min";
    }
    add("AC6", "resonance peaks near 130 and 180 Hz", [&] { return resonance_targets(dir, options); });
    add("AC7", "thermal interpolation and monotonicity", [&] { return thermal(dir); });
    add("AC8", "amplitude falls with valve thickness", [&] { return thickness_trend(dir); });

    const std::pair<const char*, double> limits[] = {{"AC2", 10.0}, {"AC3", 60.0}};
    for (auto& r : rows) {
        for (const auto& [id, limit] : limits) {
            if (r.id == id && r.status == CriterionStatus::Pass && r.seconds >= limit) {
                r.status = CriterionStatus::Fail;
                r.detail += "; exceeded " + format_double(limit) + " s";
            }
        }
    }
    return rows;
}

std::string compare_trees(const std::filesystem::path& a, const std::filesystem::path& b) {
    namespace fs = std::filesystem;
    auto listing = [](const fs::path& root) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
        }
        std::sort(files.begin(), files.end());
        return files;
    };
    const auto fa = listing(a);
    const auto fb = listing(b);
    if (fa != fb) return "file lists differ";
    for (const auto& f : fa) {
        std::ifstream ia(a / f, std::ios::binary);
        std::ifstream ib(b / f, std::ios::binary);
        const std::string ca((std::istreambuf_iterator<char>(ia)), std::istreambuf_iterator<char>());
        const std::string cb((std::istreambuf_iterator<char>(ib)), std::istreambuf_iterator<char>());
        if (ca != cb) return f.string() + " differs";
    }
    return {};
}

std::vector<CriterionResult> run_repro(const ReproOptions& options) {
    namespace fs = std::filesystem;
    if (fs::exists(options.out_dir)) fs::remove_all(options.out_dir);
    auto rows = run_criteria(options);

    auto r = timed([&] {
        CriterionResult row{"AC9", "deterministic output tree", CriterionStatus::Pass, "", 0.0};
        ReproOptions again = options;
        again.out_dir = options.out_dir.string() + ".rerun";
        if (fs::exists(again.out_dir)) fs::remove_all(again.out_dir);
        run_criteria(again);
        const auto diff = compare_trees(options.out_dir, again.out_dir);
        fs::remove_all(again.out_dir);
        std::size_t files = 0;
        for (const auto& e : fs::recursive_directory_iterator(options.out_dir)) files += e.is_regular_file() ? 1 : 0;
        row.status = diff.empty() ? CriterionStatus::Pass : CriterionStatus::Fail;
        row.detail = diff.empty() ? "second run identical across " + std::to_string(files) + " files" : diff;
        return row;
    });
    r.id = "AC9";
    if (r.title.empty()) r.title = "deterministic output tree";
    rows.push_back(std::move(r));

    std::ofstream report(options.out_dir / "report.txt", std::ios::binary);
    report << format_report(rows, false);
    return rows;
}

std::string format_report(const std::vector<CriterionResult>& rows, bool with_timings) {
    std::ostringstream s;
    for (const auto& r : rows) {
        s << r.id << "  " << to_string(r.status);
        s << std::string(9 - to_string(r.status).size(), ' ') << r.title << ": " << r.detail;
        if (with_timings) {
            std::ostringstream t;
            t.precision(2);
            t << std::fixed << r.seconds;
            s << " [" << t.str() << " s]";
        }
        s << '\n';
    }
    return s.str();
}

bool any_failed(const std::vector<CriterionResult>& rows) {
    return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.status == CriterionStatus::Fail; });
}

}  // namespace micropump
