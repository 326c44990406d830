#include "micropump/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "micropump/csv.hpp"
#include "micropump/errors.hpp"

namespace micropump {

namespace {

struct Key {
    std::string name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(RunConfig&)> get;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(std::string_view text) {
    double v = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return v;
}

int to_int(std::string_view text) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
    }
    return v;
}

bool to_bool(std::string_view text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + std::string(text) + "'");
}

template <class Ref>
Key number(std::string name, Ref ref) {
    return {std::move(name), [ref](RunConfig& c, std::string_view v) { ref(c) = to_double(v); },
            [ref](RunConfig& c) { return format_double(ref(c)); }};
}

template <class Ref>
Key integer(std::string name, Ref ref) {
    return {std::move(name), [ref](RunConfig& c, std::string_view v) { ref(c) = to_int(v); },
            [ref](RunConfig& c) { return std::to_string(ref(c)); }};
}

template <class Ref>
Key boolean(std::string name, Ref ref) {
    return {std::move(name), [ref](RunConfig& c, std::string_view v) { ref(c) = to_bool(v); },
            [ref](RunConfig& c) { return std::string(ref(c) ? "true" : "false"); }};
}

void add_valve_keys(std::vector<Key>& keys, const std::string& side, ValveConfig& (*valve)(RunConfig&)) {
    const std::string p = "valve." + side + ".";
    keys.push_back({p + "shape",
                    [valve](RunConfig& c, std::string_view v) {
                        auto& spec = valve(c).spec;
                        const double thickness = spec.thickness;
                        spec = ValveSpec::preset(parse_valve_shape(v), thickness);
                    },
                    [valve](RunConfig& c) { return std::string(to_string(valve(c).spec.shape)); }});
    keys.push_back(number(p + "length_m", [valve](RunConfig& c) -> double& { return valve(c).spec.length; }));
    keys.push_back(number(p + "width_m", [valve](RunConfig& c) -> double& { return valve(c).spec.width; }));
    keys.push_back(number(p + "thickness_m", [valve](RunConfig& c) -> double& { return valve(c).spec.thickness; }));
    keys.push_back(
        number(p + "elastic_modulus_pa", [valve](RunConfig& c) -> double& { return valve(c).spec.elastic_modulus; }));
    keys.push_back(
        number(p + "density_kg_per_m3", [valve](RunConfig& c) -> double& { return valve(c).spec.density; }));
    keys.push_back(
        number(p + "damping_n_s_per_m", [valve](RunConfig& c) -> double& { return valve(c).damping_coefficient; }));
    keys.push_back(number(p + "max_lift_m", [valve](RunConfig& c) -> double& { return valve(c).max_lift; }));
}

const std::vector<Key>& key_table() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        add_valve_keys(k, "inlet", [](RunConfig& c) -> ValveConfig& { return c.pump.inlet_valve; });
        add_valve_keys(k, "outlet", [](RunConfig& c) -> ValveConfig& { return c.pump.outlet_valve; });

        k.push_back(number("chamber.width_m", [](RunConfig& c) -> double& { return c.pump.chamber.width; }));
        k.push_back(number("chamber.length_m", [](RunConfig& c) -> double& { return c.pump.chamber.length; }));
        k.push_back(number("chamber.inlet_orifice_area_m2",
                           [](RunConfig& c) -> double& { return c.pump.chamber.inlet_orifice_area; }));
        k.push_back(number("chamber.outlet_orifice_area_m2",
                           [](RunConfig& c) -> double& { return c.pump.chamber.outlet_orifice_area; }));
        k.push_back(number("chamber.discharge_coefficient",
                           [](RunConfig& c) -> double& { return c.pump.chamber.discharge_coefficient; }));
        k.push_back(number("chamber.seat_leakage_area_m2",
                           [](RunConfig& c) -> double& { return c.pump.chamber.seat_leakage_area; }));

        k.push_back(number("fluid.density_kg_per_m3", [](RunConfig& c) -> double& { return c.pump.fluid.density; }));
        k.push_back(number("fluid.gravity_m_per_s2", [](RunConfig& c) -> double& { return c.pump.fluid.gravity; }));

        k.push_back(number("drive.voltage_v", [](RunConfig& c) -> double& { return c.pump.drive.voltage_amplitude; }));
        k.push_back(number("drive.frequency_hz", [](RunConfig& c) -> double& { return c.pump.drive.frequency; }));
        k.push_back(number("drive.force_per_volt_n_per_v",
                           [](RunConfig& c) -> double& { return c.pump.drive.force_per_volt; }));
        k.push_back(number("drive.stroke_volume_per_volt_m3_per_v",
                           [](RunConfig& c) -> double& { return c.pump.drive.stroke_volume_per_volt; }));

        k.push_back({"solver.forcing_mode",
                     [](RunConfig& c, std::string_view v) { c.pump.forcing_mode = parse_forcing_mode(v); },
                     [](RunConfig& c) { return std::string(to_string(c.pump.forcing_mode)); }});
        k.push_back(number("solver.dt_s", [](RunConfig& c) -> double& { return c.solver.dt; }));
        k.push_back(integer("solver.steps_per_cycle", [](RunConfig& c) -> int& { return c.solver.steps_per_cycle; }));
        k.push_back(integer("solver.max_cycles", [](RunConfig& c) -> int& { return c.solver.max_cycles; }));
        k.push_back(number("solver.convergence_tol", [](RunConfig& c) -> double& { return c.solver.convergence_tol; }));
        k.push_back(boolean("solver.check_valves", [](RunConfig& c) -> bool& { return c.solver.check_valves; }));
        k.push_back(boolean("solver.seat_contact", [](RunConfig& c) -> bool& { return c.solver.seat_contact; }));

        k.push_back(number("sweep.f_min_hz", [](RunConfig& c) -> double& { return c.sweep.f_min; }));
        k.push_back(number("sweep.f_max_hz", [](RunConfig& c) -> double& { return c.sweep.f_max; }));
        k.push_back(number("sweep.step_hz", [](RunConfig& c) -> double& { return c.sweep.step; }));
        k.push_back(number("sweep.voltage_v", [](RunConfig& c) -> double& { return c.sweep.voltage; }));

        k.push_back(number("pump.shutoff_head_m", [](RunConfig& c) -> double& { return c.pump_shutoff_head; }));
        k.push_back(
            number("pump.max_flow_ml_per_min", [](RunConfig& c) -> double& { return c.pump_max_flow_ml_per_min; }));

        k.push_back(number("system.pump_internal_m_per_m_per_s",
                           [](RunConfig& c) -> double& { return c.system_pump_internal; }));
        k.push_back(
            number("system.coldplate_m_per_m_per_s", [](RunConfig& c) -> double& { return c.system_coldplate; }));
        k.push_back(
            number("system.pipe_other_m_per_m_per_s", [](RunConfig& c) -> double& { return c.system_pipe_other; }));
        k.push_back({"pipe.area_m2", [](RunConfig& c, std::string_view v) { c.pipe_area = to_double(v); },
                     [](RunConfig& c) { return c.pipe_area ? format_double(*c.pipe_area) : std::string("<required>"); }});

        k.push_back(number("thermal.p1_w", [](RunConfig& c) -> double& { return c.thermal_low.power; }));
        k.push_back(number("thermal.t1_c", [](RunConfig& c) -> double& { return c.thermal_low.temperature; }));
        k.push_back(number("thermal.p2_w", [](RunConfig& c) -> double& { return c.thermal_high.power; }));
        k.push_back(number("thermal.t2_c", [](RunConfig& c) -> double& { return c.thermal_high.temperature; }));

        k.push_back(number("calibration.inlet_damping_seed_n_s_per_m",
                           [](RunConfig& c) -> double& { return c.calibration_seed.inlet_damping; }));
        k.push_back(number("calibration.outlet_damping_seed_n_s_per_m",
                           [](RunConfig& c) -> double& { return c.calibration_seed.outlet_damping; }));
        k.push_back(number("calibration.force_per_volt_seed_n_per_v",
                           [](RunConfig& c) -> double& { return c.calibration_seed.force_per_volt; }));
        k.push_back(number("calibration.stroke_volume_per_volt_seed_m3_per_v",
                           [](RunConfig& c) -> double& { return c.calibration_seed.stroke_volume_per_volt; }));
        k.push_back(integer("calibration.budget", [](RunConfig& c) -> int& { return c.calibration_budget; }));
        k.push_back(
            integer("calibration.grid_points", [](RunConfig& c) -> int& { return c.calibration_grid_points; }));
        k.push_back(
            number("calibration.grid_decades", [](RunConfig& c) -> double& { return c.calibration_grid_decades; }));
        return k;
    }();
    return table;
}

bool is_shape_key(std::string_view key) { return key.ends_with(".shape"); }

}  // namespace

void RunConfig::require(const std::vector<std::string_view>& keys) const {
    std::string missing;
    for (auto key : keys) {
        const bool absent = key == "pipe.area_m2" && !pipe_area;
        if (absent) missing += (missing.empty() ? "" : ", ") + std::string(key);
    }
    if (!missing.empty()) throw InvalidSpec(missing, "required key(s) missing from config");
}

namespace {

// Library fields are named like config keys minus their unit suffix.
std::string config_key_for(std::string field) {
    auto replace_prefix = [&](const std::string& from, const std::string& to) {
        if (field.starts_with(from)) field = to + field.substr(from.size());
    };
    replace_prefix("inlet_valve.", "valve.inlet.");
    replace_prefix("outlet_valve.", "valve.outlet.");
    if (const auto pos = field.find("damping_coefficient"); pos != std::string::npos) {
        field.replace(pos, std::string("damping_coefficient").size(), "damping");
    }
    for (const auto& k : key_table()) {
        if (k.name == field || k.name.starts_with(field + "_")) return k.name;
    }
    return field;
}

}  // namespace

void RunConfig::validate() const {
    try {
        pump.validate();
        sweep.validate();
    } catch (const InvalidSpec& e) {
        const std::string what = e.what();
        const auto colon = what.find(": ");
        throw InvalidSpec(config_key_for(e.field()), colon == std::string::npos ? what : what.substr(colon + 2));
    }
    if (solver.max_cycles < 2) throw InvalidSpec("solver.max_cycles", "must be at least 2");
    if (solver.steps_per_cycle < 51) throw InvalidSpec("solver.steps_per_cycle", "must exceed 50");
    if (solver.dt < 0.0) throw InvalidSpec("solver.dt_s", "must be non-negative (0 selects the default)");
    if (!(solver.convergence_tol > 0.0)) throw InvalidSpec("solver.convergence_tol", "must be positive");
    detail::require_positive(pump_shutoff_head, "pump.shutoff_head_m");
    detail::require_positive(pump_max_flow_ml_per_min, "pump.max_flow_ml_per_min");
    detail::require_non_negative(system_pump_internal, "system.pump_internal_m_per_m_per_s");
    detail::require_non_negative(system_coldplate, "system.coldplate_m_per_m_per_s");
    detail::require_non_negative(system_pipe_other, "system.pipe_other_m_per_m_per_s");
    if (pipe_area) detail::require_positive(*pipe_area, "pipe.area_m2");
    try {
        calibration_seed.validate();
    } catch (const InvalidSpec& e) {
        throw InvalidSpec("calibration." + e.field() + "_seed", "seeds must be positive");
    }
    if (calibration_budget < 0) throw InvalidSpec("calibration.budget", "must be non-negative");
    if (calibration_grid_points < 0) throw InvalidSpec("calibration.grid_points", "must be non-negative");
    detail::require_positive(calibration_grid_decades, "calibration.grid_decades");
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
    struct Entry {
        const Key* key;
        std::string value;
        int line;
    };
    std::map<std::string, const Key*, std::less<>> lookup;
    for (const auto& k : key_table()) lookup.emplace(k.name, &k);

    std::vector<std::string> problems;
    std::vector<Entry> entries;
    std::map<std::string, int, std::less<>> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        const std::string at = std::string(source) + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string_view::npos) {
            problems.push_back(at + "expected key = value");
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        const auto it = lookup.find(key);
        if (it == lookup.end()) {
            problems.push_back(at + key + ": unknown key");
            continue;
        }
        if (const auto dup = seen.find(key); dup != seen.end()) {
            problems.push_back(at + key + ": duplicate of line " + std::to_string(dup->second));
            continue;
        }
        seen.emplace(key, line_no);
        entries.push_back({it->second, value, line_no});
    }

    RunConfig config;
    auto apply = [&](const Entry& e) {
        try {
            e.key->set(config, e.value);
        } catch (const std::exception& ex) {
            problems.push_back(std::string(source) + ":" + std::to_string(e.line) + ": " + e.key->name + ": " +
                               ex.what());
        }
    };
    for (const auto& e : entries) {
        if (is_shape_key(e.key->name)) apply(e);
    }
    for (const auto& e : entries) {
        if (!is_shape_key(e.key->name)) apply(e);
    }

    if (!problems.empty()) {
        std::string message;
        for (const auto& p : problems) message += "\n  " + p;
        throw InvalidSpec(std::string(source), "invalid configuration:" + message);
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec(path.string(), "cannot open config file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str(), path.string());
}

std::string dump_run_config(const RunConfig& config) {
    RunConfig copy = config;
    std::string out;
    for (const auto& k : key_table()) {
        if (k.name == "pipe.area_m2" && !copy.pipe_area) {
            out += "# pipe.area_m2 = <required for pq and loss flow conversion>\n";
            continue;
        }
        out += k.name + " = " + k.get(copy) + "\n";
    }
    return out;
}

std::uint64_t config_hash(const RunConfig& config) { return fnv1a(dump_run_config(config)); }

std::vector<std::string> run_config_keys() {
    std::vector<std::string> names;
    for (const auto& k : key_table()) names.push_back(k.name);
    return names;
}

}  // namespace micropump
