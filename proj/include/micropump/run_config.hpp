#pragma once

/**
 * @file run_config.hpp
 * @brief Flat `key = value` run configuration with units in the key names.
 *
 *   # comment
 *   valve.inlet.shape = standard
 *   valve.inlet.thickness_m = 0.5e-3
 *   drive.frequency_hz = 130
 *
 * A `shape` key loads that preset's dimensions before any explicit
 * dimension key of the same valve is applied, whatever the line order.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "micropump/performance.hpp"
#include "micropump/pump_dynamics.hpp"
#include "micropump/thermal_loop.hpp"

namespace micropump {

struct RunConfig {
    PumpConfig pump = PumpConfig::defaults();
    SimOptions solver;
    SweepSpec sweep;

    double pump_shutoff_head = 0.52;          // m
    double pump_max_flow_ml_per_min = 72.0;
    // Linear loss coefficients against mean pipe velocity, m per (m/s).
    double system_pump_internal = 0.0;
    double system_coldplate = 0.0;
    double system_pipe_other = 0.0;
    std::optional<double> pipe_area;          // m^2, no default

    PowerTemperature thermal_low{30.0, 48.0};
    PowerTemperature thermal_high{60.0, 73.6};

    CalibrationParams calibration_seed{2.0e-3, 2.0e-3, 2.0e-4, 2.0e-10};
    int calibration_budget = 1200;
    int calibration_grid_points = 5;
    double calibration_grid_decades = 2.0;

    /// Throws one InvalidSpec listing every listed key that has no value.
    void require(const std::vector<std::string_view>& keys) const;

    /// Cross-field validation of everything the subcommands consume.
    void validate() const;
};

/// Throws InvalidSpec listing every unknown key, malformed value and
/// duplicate in one message. `source` prefixes line numbers.
RunConfig parse_run_config(std::string_view text, std::string_view source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

/// Every key with its resolved value, one per line, in a fixed order.
/// Parsing the dump reproduces the configuration.
std::string dump_run_config(const RunConfig& config);

/// FNV-1a of the dump.
std::uint64_t config_hash(const RunConfig& config);

/// All recognised keys in dump order.
std::vector<std::string> run_config_keys();

}  // namespace micropump
