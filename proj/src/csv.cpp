#include "micropump/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "micropump/errors.hpp"

namespace micropump {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_number(std::string_view text, double& value) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::string where(std::string_view source, int line) {
    return std::string(source) + ":" + std::to_string(line);
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex_hash(std::uint64_t hash) {
    std::array<char, 17> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + 16, hash, 16);
    std::string digits(buf.data(), ptr);
    return std::string(16 - digits.size(), '0') + digits;
}

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

void write_provenance(std::ostream& out, std::uint64_t config_hash) {
    out << "# micropump " << kToolVersion << " config=" << hex_hash(config_hash) << '\n';
}

std::size_t CsvTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidSpec(std::string(name), "required CSV column is missing");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in, std::string_view source) {
    CsvTable table;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split(line);
        if (table.header.empty()) {
            double probe = 0.0;
            if (parse_number(cells.front(), probe)) {
                throw InvalidSpec(where(source, line_no), "header row required before data");
            }
            for (auto c : cells) table.header.emplace_back(c);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw InvalidSpec(where(source, line_no), "expected " + std::to_string(table.header.size()) +
                                                          " columns, found " + std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!parse_number(cells[i], row[i])) {
                throw InvalidSpec(where(source, line_no), "not a number in column " + table.header[i] + ": '" +
                                                              std::string(cells[i]) + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw InvalidSpec(std::string(source), "no header row");
    return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec(path.string(), "cannot open file");
    return read_csv(in, path.string());
}

FlowFrequencyCurve read_flow_curve(const CsvTable& table) {
    const auto f = table.column("frequency_hz");
    const auto q = table.column("flow_ml_per_min");
    FlowFrequencyCurve curve;
    for (const auto& row : table.rows) curve.points.push_back({row[f], row[q], false});
    curve.validate();
    return curve;
}

void write_flow_curve(std::ostream& out, const FlowFrequencyCurve& curve, std::uint64_t config_hash) {
    write_provenance(out, config_hash);
    out << "frequency_hz,flow_ml_per_min,abnormal\n";
    for (const auto& p : curve.points) {
        out << format_double(p.frequency) << ',' << format_double(p.flow_ml_per_min) << ',' << (p.abnormal ? 1 : 0)
            << '\n';
    }
}

std::vector<HeadLossSample> read_head_loss_samples(const CsvTable& table) {
    const auto v = table.column("velocity_m_per_s");
    const auto h = table.column("head_m");
    std::vector<HeadLossSample> samples;
    for (const auto& row : table.rows) samples.push_back({row[v], row[h]});
    return samples;
}

std::vector<PowerTemperature> read_thermal_points(const CsvTable& table) {
    const auto p = table.column("power_w");
    const auto t = table.column("core_temp_c");
    std::vector<PowerTemperature> points;
    for (const auto& row : table.rows) points.push_back({row[p], row[t]});
    return points;
}

void write_calibration_result(std::ostream& out, const CalibrationResult& result) {
    out << "inlet_damping_n_s_per_m = " << format_double(result.params.inlet_damping) << '\n'
        << "outlet_damping_n_s_per_m = " << format_double(result.params.outlet_damping) << '\n'
        << "force_per_volt_n_per_v = " << format_double(result.params.force_per_volt) << '\n'
        << "stroke_volume_per_volt_m3_per_v = " << format_double(result.params.stroke_volume_per_volt) << '\n'
        << "objective_ml2_per_min2 = " << format_double(result.objective) << '\n'
        << "seed_objective_ml2_per_min2 = " << format_double(result.seed_objective) << '\n'
        << "iterations = " << result.iterations << '\n'
        << "seed_returned = " << (result.seed_returned ? "true" : "false") << '\n';
}

CalibrationResult read_calibration_result(std::istream& in, std::string_view source) {
    CalibrationResult r;
    std::string raw;
    int line_no = 0;
    int seen = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw InvalidSpec(where(source, line_no), "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto text = trim(line.substr(eq + 1));
        if (key == "seed_returned") {
            if (text != "true" && text != "false") throw InvalidSpec(std::string(key), "expected true or false");
            r.seed_returned = text == "true";
            ++seen;
            continue;
        }
        double value = 0.0;
        if (!parse_number(text, value)) throw InvalidSpec(std::string(key), "not a number: '" + std::string(text) + "'");
        if (key == "inlet_damping_n_s_per_m") {
            r.params.inlet_damping = value;
        } else if (key == "outlet_damping_n_s_per_m") {
            r.params.outlet_damping = value;
        } else if (key == "force_per_volt_n_per_v") {
            r.params.force_per_volt = value;
        } else if (key == "stroke_volume_per_volt_m3_per_v") {
            r.params.stroke_volume_per_volt = value;
        } else if (key == "objective_ml2_per_min2") {
            r.objective = value;
        } else if (key == "seed_objective_ml2_per_min2") {
            r.seed_objective = value;
        } else if (key == "iterations") {
            r.iterations = static_cast<int>(value);
        } else {
            throw InvalidSpec(std::string(key), "unknown key");
        }
        ++seen;
    }
    if (seen != 8) throw InvalidSpec(std::string(source), "incomplete calibration result");
    r.params.validate();
    return r;
}

}  // namespace micropump
