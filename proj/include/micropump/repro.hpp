#pragma once

/**
 * @file repro.hpp
 * @brief The acceptance runs behind `micropump repro`.
 *
 * Each criterion runs on built-in reference configurations, writes its data
 * under the output directory and reports one row. Files carry no timings or
 * paths, so two runs with the same seed produce identical trees.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace micropump {

enum class CriterionStatus { Pass, Fail, Skipped };

std::string_view to_string(CriterionStatus status);

struct CriterionResult {
    std::string id;      // "AC1" ... "AC9"
    std::string title;
    CriterionStatus status = CriterionStatus::Fail;
    std::string detail;
    double seconds = 0.0;  // wall time, reported but never written to the tree
};

struct ReproOptions {
    std::filesystem::path out_dir = "repro";
    std::uint64_t seed = 20240101;                         // noise for the calibration round trip
    std::optional<std::filesystem::path> digitized_curve;  // `frequency_hz,flow_ml_per_min`
    int calibration_budget = 1200;
};

/// Criteria 1 to 8, writing into `options.out_dir`.
std::vector<CriterionResult> run_criteria(const ReproOptions& options);

/// Criteria 1 to 8, then a second run into a scratch sibling directory whose
/// tree is compared byte for byte (criterion 9). Writes `report.txt` last.
std::vector<CriterionResult> run_repro(const ReproOptions& options);

/// Empty when identical, otherwise the first difference found.
std::string compare_trees(const std::filesystem::path& a, const std::filesystem::path& b);

/// One `ACn  PASS|FAIL|SKIPPED  title: detail` line per row.
std::string format_report(const std::vector<CriterionResult>& rows, bool with_timings);

bool any_failed(const std::vector<CriterionResult>& rows);

}  // namespace micropump
