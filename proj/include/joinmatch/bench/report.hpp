#pragma once

// Benchmark rows, per-configuration aggregates and their CSV/JSON forms.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace joinmatch::bench {

struct BenchRow {
  std::string benchmark;
  std::string matcher;
  std::int64_t parameter = 0;
  int repetition = 0;
  double elapsed_ms = 0;
  std::uint64_t matches = 0;
  double throughput_mps = 0;
  bool timed_out = false;

  bool operator==(const BenchRow&) const = default;
};

struct SummaryRow {
  std::string benchmark;
  std::string matcher;
  std::int64_t parameter = 0;
  double mean_throughput_mps = 0;
  double stddev_throughput_mps = 0;
};

inline double throughput(std::uint64_t matches, double elapsed_ms) {
  return elapsed_ms > 0 ? static_cast<double>(matches) / (elapsed_ms / 1000.0) : 0.0;
}

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  double m = mean(xs), acc = 0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

struct BenchReport {
  std::vector<BenchRow> rows;
  std::map<std::string, std::string> metadata;

  /// One row per (benchmark, matcher, parameter) in first-seen order.
  /// Timed-out repetitions are left out of the aggregates; a group with
  /// none left gets no row.
  std::vector<SummaryRow> summary() const {
    using Key = std::tuple<std::string, std::string, std::int64_t>;
    std::vector<Key> order;
    std::map<Key, std::vector<double>> samples;
    for (const auto& r : rows) {
      Key k{r.benchmark, r.matcher, r.parameter};
      if (!samples.count(k)) order.push_back(k);
      auto& v = samples[k];
      if (!r.timed_out) v.push_back(r.throughput_mps);
    }
    std::vector<SummaryRow> out;
    for (const auto& k : order) {
      const auto& v = samples[k];
      if (v.empty()) continue;
      out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), mean(v), sample_stddev(v)});
    }
    return out;
  }

  void append(const BenchReport& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    for (const auto& [k, v] : other.metadata) metadata[k] = v;
  }

  bool any_timed_out() const {
    for (const auto& r : rows) {
      if (r.timed_out) return true;
    }
    return false;
  }
};

inline constexpr const char* kCsvHeader = "benchmark,matcher,parameter,repetition,elapsed_ms,matches,throughput_mps";
inline constexpr const char* kSummaryHeader =
    "benchmark,matcher,parameter,mean_throughput_mps,stddev_throughput_mps";

namespace detail {

inline std::string num(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Timed-out repetitions carry `timeout` in the throughput column.
inline void write_csv(std::ostream& out, const BenchReport& r) {
  out << kCsvHeader << '\n';
  for (const auto& row : r.rows) {
    out << row.benchmark << ',' << row.matcher << ',' << row.parameter << ',' << row.repetition << ','
        << detail::num(row.elapsed_ms) << ',' << row.matches << ','
        << (row.timed_out ? std::string("timeout") : detail::num(row.throughput_mps)) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const BenchReport& r) {
  out << kSummaryHeader << '\n';
  for (const auto& s : r.summary()) {
    out << s.benchmark << ',' << s.matcher << ',' << s.parameter << ',' << detail::num(s.mean_throughput_mps) << ','
        << detail::num(s.stddev_throughput_mps) << '\n';
  }
}

inline std::vector<BenchRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("unexpected CSV header: " + line);
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = detail::split_csv(line);
    if (f.size() != 7) throw std::runtime_error("expected 7 CSV fields: " + line);
    BenchRow r;
    r.benchmark = f[0];
    r.matcher = f[1];
    r.parameter = std::stoll(f[2]);
    r.repetition = std::stoi(f[3]);
    r.elapsed_ms = std::stod(f[4]);
    r.matches = std::stoull(f[5]);
    r.timed_out = f[6] == "timeout";
    r.throughput_mps = r.timed_out ? 0.0 : std::stod(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"benchmark", row.benchmark},
                         {"matcher", row.matcher},
                         {"parameter", row.parameter},
                         {"repetition", row.repetition},
                         {"elapsed_ms", row.elapsed_ms},
                         {"matches", row.matches},
                         {"throughput_mps", row.throughput_mps},
                         {"timed_out", row.timed_out}});
  }
  j["summary"] = nlohmann::json::array();
  for (const auto& s : r.summary()) {
    j["summary"].push_back({{"benchmark", s.benchmark},
                            {"matcher", s.matcher},
                            {"parameter", s.parameter},
                            {"mean_throughput_mps", s.mean_throughput_mps},
                            {"stddev_throughput_mps", s.stddev_throughput_mps}});
  }
  j["metadata"] = r.metadata;
  return j;
}

inline BenchReport from_json(const nlohmann::json& j) {
  BenchReport r;
  for (const auto& e : j.at("rows")) {
    BenchRow row;
    row.benchmark = e.at("benchmark").get<std::string>();
    row.matcher = e.at("matcher").get<std::string>();
    row.parameter = e.at("parameter").get<std::int64_t>();
    row.repetition = e.at("repetition").get<int>();
    row.elapsed_ms = e.at("elapsed_ms").get<double>();
    row.matches = e.at("matches").get<std::uint64_t>();
    row.throughput_mps = e.at("throughput_mps").get<double>();
    row.timed_out = e.value("timed_out", false);
    r.rows.push_back(std::move(row));
  }
  if (j.contains("metadata")) r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  return r;
}

/// `path.csv` -> `path.summary.csv`; other names get the suffix appended.
inline std::string summary_path(const std::string& path) {
  auto dot = path.rfind('.');
  auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ".summary.csv";
  return path.substr(0, dot) + ".summary.csv";
}

/// Writes the rows as CSV or JSON to `path` and the aggregates to the
/// companion summary CSV.
inline void emit_report(const BenchReport& r, const std::string& format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (format == "csv") {
    write_csv(out, r);
  } else if (format == "json") {
    out << to_json(r).dump(2) << '\n';
  } else {
    throw std::invalid_argument("unknown format " + format);
  }
  std::ofstream sum(summary_path(path));
  if (!sum) throw std::runtime_error("cannot write " + summary_path(path));
  write_summary_csv(sum, r);
  if (!out || !sum) throw std::runtime_error("write failed for " + path);
}

}  // namespace joinmatch::bench
