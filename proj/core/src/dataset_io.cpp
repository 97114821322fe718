#include "lope/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lope/error.hpp"

namespace lope {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("line " + std::to_string(line_no) + ": cannot parse '" + text + "' as a number");
  }
}

std::size_t parse_index(const std::string& text, std::size_t line_no) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("line " + std::to_string(line_no) + ": cannot parse '" + text + "' as an index");
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_historical_csv(std::ostream& out, const HistoricalDataset& data) {
  out << "user_index,action,propensity";
  for (std::size_t d = 0; d < data.dim_s; ++d) out << ",s_" << d;
  out << ",r\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.users[i] << ',' << data.actions[i] << ',' << format_double(data.propensities[i]);
    for (const double s : data.short_row(i)) out << ',' << format_double(s);
    out << ',' << format_double(data.long_rewards[i]) << '\n';
  }
}

void write_historical_csv(const std::filesystem::path& path, const HistoricalDataset& data) {
  auto out = open_output(path);
  write_historical_csv(out, data);
}

HistoricalDataset read_historical_csv(std::istream& in) {
  HistoricalDataset data;
  std::string line;
  if (!std::getline(in, line)) return data;
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "user_index" || header[1] != "action" || header[2] != "propensity" ||
      header.back() != "r") {
    throw ValidationError("historical CSV header must be user_index,action,propensity,s_0..,r");
  }
  data.dim_s = header.size() - 4;
  std::vector<double> s(data.dim_s);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t d = 0; d < data.dim_s; ++d) s[d] = parse_double(fields[3 + d], line_no);
    data.push_back(parse_index(fields[0], line_no), parse_index(fields[1], line_no),
                   parse_double(fields[2], line_no), s, parse_double(fields.back(), line_no));
  }
  data.validate();
  return data;
}

HistoricalDataset read_historical_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  auto data = read_historical_csv(in);
  data.provenance = path.filename().string();
  return data;
}

void write_short_csv(const std::filesystem::path& path, const ShortTermDataset& data) {
  auto out = open_output(path);
  out << "user_index";
  for (std::size_t d = 0; d < data.dim_s; ++d) out << ",s_" << d;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.users[i];
    for (const double s : data.short_row(i)) out << ',' << format_double(s);
    out << '\n';
  }
}

ShortTermDataset read_short_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  ShortTermDataset data;
  std::string line;
  if (!std::getline(in, line)) return data;
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "user_index") {
    throw ValidationError("short-term CSV header must be user_index,s_0..");
  }
  data.dim_s = header.size() - 1;
  std::vector<double> s(data.dim_s);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": wrong number of fields");
    }
    for (std::size_t d = 0; d < data.dim_s; ++d) s[d] = parse_double(fields[1 + d], line_no);
    data.push_back(parse_index(fields[0], line_no), s);
  }
  return data;
}

void write_contexts_csv(const std::filesystem::path& path, const ContextSet& contexts) {
  auto out = open_output(path);
  for (std::size_t j = 0; j < contexts.dim(); ++j) out << (j ? "," : "") << "x_" << j;
  out << '\n';
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    for (std::size_t j = 0; j < contexts.dim(); ++j) {
      out << (j ? "," : "") << format_double(contexts.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

ContextSet read_contexts_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + " is empty");
  const std::size_t dim = split_csv_line(line).size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != dim) throw ValidationError("line " + std::to_string(line_no) + ": wrong number of fields");
    for (const auto& f : fields) values.push_back(parse_double(f, line_no));
    ++rows;
  }
  if (rows == 0) throw ValidationError(path.string() + " has no context rows");
  Matrix features(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * dim + j];
    }
  }
  return ContextSet::uniform(std::move(features));
}

nlohmann::json policy_to_json(const TabularPolicy& policy) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t x = 0; x < policy.n_users(); ++x) {
    std::vector<double> row(policy.n_actions());
    for (std::size_t a = 0; a < policy.n_actions(); ++a) row[a] = policy.prob(x, a);
    rows.push_back(row);
  }
  return {{"kind", "tabular"}, {"n_users", policy.n_users()}, {"n_actions", policy.n_actions()}, {"probs", rows}};
}

TabularPolicy policy_from_json(const nlohmann::json& j) {
  if (!j.contains("probs")) throw ValidationError("policy JSON lacks a 'probs' array");
  const auto& rows = j.at("probs");
  if (!rows.is_array() || rows.empty()) throw ValidationError("policy 'probs' must be a non-empty array");
  const std::size_t n_actions = rows.front().size();
  Matrix probs(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_actions));
  for (std::size_t x = 0; x < rows.size(); ++x) {
    if (rows[x].size() != n_actions) throw DimensionError("policy rows have different lengths");
    for (std::size_t a = 0; a < n_actions; ++a) {
      probs(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)) = rows[x][a].get<double>();
    }
  }
  return TabularPolicy(std::move(probs));
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace lope
