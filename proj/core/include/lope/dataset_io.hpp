#pragma once

#include <filesystem>
#include <iosfwd>

#include <nlohmann/json.hpp>

#include "lope/types.hpp"

namespace lope {

// Columnar CSV: user_index,action,propensity,s_0..s_{dim_s-1},r with one
// header line. Doubles are written with 17 significant digits.
void write_historical_csv(std::ostream& out, const HistoricalDataset& data);
void write_historical_csv(const std::filesystem::path& path, const HistoricalDataset& data);
HistoricalDataset read_historical_csv(std::istream& in);
HistoricalDataset read_historical_csv(const std::filesystem::path& path);

// user_index,s_0..s_{dim_s-1}
void write_short_csv(const std::filesystem::path& path, const ShortTermDataset& data);
ShortTermDataset read_short_csv(const std::filesystem::path& path);

// One feature row per user, header x_0..x_{d-1}. Weights are uniform.
void write_contexts_csv(const std::filesystem::path& path, const ContextSet& contexts);
ContextSet read_contexts_csv(const std::filesystem::path& path);

// {"kind": "tabular", "n_users": .., "n_actions": .., "probs": [[..], ..]}
nlohmann::json policy_to_json(const TabularPolicy& policy);
TabularPolicy policy_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// Formats a double with 17 significant digits.
std::string format_double(double value);

}  // namespace lope
