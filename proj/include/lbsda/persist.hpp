#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "lbsda/config.hpp"
#include "lbsda/harness.hpp"
#include "lbsda/version.hpp"

namespace lbsda {

/// I/O failure; the message always names the offending path.
class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

inline constexpr const char* kCsvHeader = "t,policy,mean_regret,q25,q75";

struct CsvRow {
  TimeStep t = 0;
  std::string policy;
  double mean_regret = 0.0, q25 = 0.0, q75 = 0.0;
  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

inline std::vector<CsvRow> csv_rows(const AggregateResult& result) {
  std::vector<CsvRow> rows;
  for (const auto& p : result.policies)
    for (std::size_t c = 0; c < p.times.size(); ++c) rows.push_back({p.times[c], p.label, p.mean[c], p.q25[c], p.q75[c]});
  return rows;
}

inline void write_csv(const std::vector<CsvRow>& rows, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows)
    os << r.t << ',' << r.policy << ',' << format_double(r.mean_regret) << ',' << format_double(r.q25) << ','
       << format_double(r.q75) << '\n';
}

inline std::vector<CsvRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::invalid_argument("missing CSV header '" + std::string(kCsvHeader) + "'");
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 5 fields");
    try {
      CsvRow r;
      r.t = static_cast<TimeStep>(std::stoull(cells[0]));
      r.policy = cells[1];
      r.mean_regret = parse_double(cells[2]);
      r.q25 = parse_double(cells[3]);
      r.q75 = parse_double(cells[4]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

inline std::vector<CsvRow> read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  try {
    return read_csv(in);
  } catch (const std::invalid_argument& e) {
    throw IoError(path, e.what());
  }
}

inline nlohmann::json manifest_json(const ExperimentConfig& cfg, const AggregateResult& result,
                                    const std::vector<std::string>& warnings = {}) {
  using nlohmann::json;
  json j;
  j["software"] = {{"name", "lbsda"}, {"version", kVersion}};
  j["config"] = config_to_json(cfg);
  j["environment_phases"] = environment_to_json(cfg.environment)["phases"];
  j["seeds"] = result.seeds;
  j["wall_time_seconds"] = result.wall_time;
  json pols = json::array();
  for (const auto& p : result.policies) {
    pols.push_back({{"label", p.label},
                    {"name", p.name},
                    {"final_regret",
                     {{"mean", p.final_regret.mean}, {"q25", p.final_regret.q25}, {"median", p.final_regret.median},
                      {"q75", p.final_regret.q75}, {"min", p.final_regret.min}, {"max", p.final_regret.max}}},
                    {"mean_pulls", p.mean_pulls},
                    {"storage_high_water", p.storage_high_water},
                    {"invariant_violations", p.invariant_violations},
                    {"violating_seeds", p.violating_seeds},
                    {"clamp_warnings", p.clamp_warnings},
                    {"wall_time_seconds", p.wall_time}});
  }
  j["policies"] = pols;
  j["warnings"] = warnings;
  return j;
}

struct PersistedPaths {
  std::filesystem::path csv, manifest;
};

/// Writes `<stem>.csv` and `<stem>.manifest.json` under `dir`, creating it.
inline PersistedPaths persist_results(const ExperimentConfig& cfg, const AggregateResult& result,
                                      const std::filesystem::path& dir, const std::string& stem,
                                      const std::vector<std::string>& warnings = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
  PersistedPaths out{dir / (stem + ".csv"), dir / (stem + ".manifest.json")};
  {
    std::ofstream os(out.csv);
    if (!os) throw IoError(out.csv, "cannot open for writing");
    write_csv(csv_rows(result), os);
    if (!os) throw IoError(out.csv, "write failed");
  }
  {
    std::ofstream os(out.manifest);
    if (!os) throw IoError(out.manifest, "cannot open for writing");
    os << manifest_json(cfg, result, warnings).dump(2) << '\n';
    if (!os) throw IoError(out.manifest, "write failed");
  }
  return out;
}

}  // namespace lbsda
