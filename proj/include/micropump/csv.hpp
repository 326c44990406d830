#pragma once

/**
 * @file csv.hpp
 * @brief Plain-text data exchange: measured curves, loss samples, thermal
 *        points and calibration results.
 *
 * Readers skip blank lines and lines starting with '#', require a header,
 * and locate columns by name, so extra columns are tolerated.
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "micropump/hydraulics.hpp"
#include "micropump/performance.hpp"
#include "micropump/thermal_loop.hpp"

namespace micropump {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);
std::string hex_hash(std::uint64_t hash);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// `# micropump <version> config=<hash>`; every emitted CSV starts with it.
void write_provenance(std::ostream& out, std::uint64_t config_hash);

/// Numeric table addressed by column name.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a required column; throws InvalidSpec naming the column.
    std::size_t column(std::string_view name) const;
};

/// `source` names the input in error messages.
CsvTable read_csv(std::istream& in, std::string_view source);
CsvTable read_csv_file(const std::filesystem::path& path);

/// `frequency_hz,flow_ml_per_min`.
FlowFrequencyCurve read_flow_curve(const CsvTable& table);
/// `frequency_hz,flow_ml_per_min,abnormal`.
void write_flow_curve(std::ostream& out, const FlowFrequencyCurve& curve, std::uint64_t config_hash);

/// `velocity_m_per_s,head_m`.
std::vector<HeadLossSample> read_head_loss_samples(const CsvTable& table);

/// `power_w,core_temp_c`.
std::vector<PowerTemperature> read_thermal_points(const CsvTable& table);

/// Flat `key = value` text with the unit in every key name.
void write_calibration_result(std::ostream& out, const CalibrationResult& result);
CalibrationResult read_calibration_result(std::istream& in, std::string_view source);

}  // namespace micropump
