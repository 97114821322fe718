#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lope/harness/experiments.hpp"
#include "lope/harness/metrics.hpp"
#include "lope/harness/theorem_suite.hpp"

namespace lope {

// estimator,param,mse,bias2,var,R
void write_sweep_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_sweep_csv(const std::filesystem::path& path);

// estimator,param,accuracy,R
void write_selection_csv(const std::filesystem::path& path, const SelectionReport& report);
// learner,param,mean_value,relative_value,R
void write_opl_csv(const std::filesystem::path& path, const OplReport& report);
// check,value,tolerance,passed,informational
void write_theorem_csv(const std::filesystem::path& path, const TheoremSuiteReport& report);

enum class SweepMetric { kMse, kSquaredBias, kVariance };
std::string to_string(SweepMetric metric);

/// Line chart of one metric against the parameter, one line per estimator,
/// optionally on a log10 y-axis. Output depends only on the rows, so a chart
/// rebuilt from the CSV is byte-identical.
std::string render_sweep_svg(const std::vector<MetricRow>& rows, SweepMetric metric, bool log_y = true);

/// Writes <stem>_mse.svg, <stem>_bias2.svg and <stem>_var.svg into `dir`.
std::vector<std::filesystem::path> write_sweep_svgs(const std::filesystem::path& dir, const std::string& stem,
                                                    const std::vector<MetricRow>& rows, bool log_y = true);

}  // namespace lope
