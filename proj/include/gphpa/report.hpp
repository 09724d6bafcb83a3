#pragma once

// Run summaries, cross-policy comparison and SVG pod-count charts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gphpa/cluster_sim.hpp"

namespace gphpa {

/// Runs that cannot be compared; field() names the first differing field.
class RunMismatchError : public std::runtime_error {
 public:
  RunMismatchError(const std::string& field, const std::string& a, const std::string& b)
      : std::runtime_error("runs differ in '" + field + "': " + a + " vs " + b), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceTotals {
  long long pod_minutes = 0;
  long long overload_minutes = 0;
  double mean_utilization = 0.0;
  friend bool operator==(const ServiceTotals&, const ServiceTotals&) = default;
};

/// Identity of the replayed workload plus the aggregate outcome of one run.
struct RunSummary {
  std::string policy;
  std::string trace_id;   // source description
  std::uint64_t trace_digest = 0;
  std::uint64_t seed = 0;
  std::size_t start = 0;
  std::size_t horizon = 0;
  std::vector<std::string> services;
  long long pod_minutes = 0;
  long long overload_minutes = 0;
  double mean_utilization = 0.0;
  int peak_total_pods = 0;
  std::size_t capacity_warnings = 0;
  std::vector<ServiceTotals> per_service;
};

/// FNV-1a over the printed request values; identifies a trace slice.
inline std::uint64_t trace_digest(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : values) {
    for (char ch : format_double(v)) {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
    h ^= static_cast<unsigned char>(';');
    h *= 1099511628211ULL;
  }
  return h;
}

inline RunSummary summarize(const SimulationLog& log, const std::string& trace_id,
                            std::uint64_t digest, std::uint64_t seed) {
  RunSummary s;
  s.policy = log.policy;
  s.trace_id = trace_id;
  s.trace_digest = digest;
  s.seed = seed;
  s.start = log.start;
  s.horizon = log.horizon;
  s.services = log.services;
  s.pod_minutes = log.pod_minutes();
  s.overload_minutes = log.overload_minutes();
  s.mean_utilization = log.mean_utilization();
  s.peak_total_pods = log.peak_total_pods();
  s.capacity_warnings = log.capacity_warnings;
  s.per_service.assign(log.services.size(), {});
  std::vector<std::size_t> counts(log.services.size(), 0);
  for (const auto& r : log.rows) {
    auto& t = s.per_service[r.service];
    t.pod_minutes += r.pods;
    t.overload_minutes += r.overloaded ? 1 : 0;
    t.mean_utilization += r.utilization;
    counts[r.service] += 1;
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) s.per_service[i].mean_utilization /= static_cast<double>(counts[i]);
  }
  return s;
}

/// Rounded to the precision the CSV carries, so a summary rebuilt from the
/// CSV matches the one written at simulation time.
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t i = 0; i < s.services.size(); ++i) {
    const auto& t = s.per_service[i];
    per[s.services[i]] = {{"pod_minutes", t.pod_minutes},
                          {"overload_minutes", t.overload_minutes},
                          {"mean_utilization", round6(t.mean_utilization)}};
  }
  char digest[17];
  std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(s.trace_digest));
  return {{"policy", s.policy},
          {"trace", s.trace_id},
          {"trace_digest", digest},
          {"seed", s.seed},
          {"start", s.start},
          {"horizon", s.horizon},
          {"services", s.services},
          {"pod_minutes", s.pod_minutes},
          {"overload_minutes", s.overload_minutes},
          {"mean_utilization", round6(s.mean_utilization)},
          {"peak_total_pods", s.peak_total_pods},
          {"capacity_warnings", s.capacity_warnings},
          {"per_service", per}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  try {
    RunSummary s;
    s.policy = j.at("policy").get<std::string>();
    s.trace_id = j.at("trace").get<std::string>();
    s.trace_digest = std::stoull(j.at("trace_digest").get<std::string>(), nullptr, 16);
    s.seed = j.at("seed").get<std::uint64_t>();
    s.start = j.at("start").get<std::size_t>();
    s.horizon = j.at("horizon").get<std::size_t>();
    s.services = j.at("services").get<std::vector<std::string>>();
    s.pod_minutes = j.at("pod_minutes").get<long long>();
    s.overload_minutes = j.at("overload_minutes").get<long long>();
    s.mean_utilization = j.at("mean_utilization").get<double>();
    s.peak_total_pods = j.at("peak_total_pods").get<int>();
    s.capacity_warnings = j.at("capacity_warnings").get<std::size_t>();
    for (const auto& name : s.services) {
      const auto& t = j.at("per_service").at(name);
      s.per_service.push_back({t.at("pod_minutes").get<long long>(),
                               t.at("overload_minutes").get<long long>(),
                               t.at("mean_utilization").get<double>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("summary: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ReportError(std::string("summary: ") + e.what());
  }
}

/// Rebuilds the per-minute log from its CSV form. Decisions are not part of
/// the CSV and stay empty.
inline SimulationLog parse_simulation_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSimulationLogHeader) {
    throw ReportError("simulation CSV: unexpected header");
  }
  SimulationLog log;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  std::int64_t first_minute = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw ReportError("simulation CSV line " + std::to_string(line_no) + ": expected 9 fields");
    try {
      SimulationRow r;
      r.minute = std::stoll(f[0]);
      if (first_minute < 0) first_minute = r.minute;
      auto it = index.find(f[1]);
      if (it == index.end()) {
        if (r.minute != first_minute) {
          throw ReportError("simulation CSV line " + std::to_string(line_no) + ": new service '" + f[1] + "'");
        }
        it = index.emplace(f[1], log.services.size()).first;
        log.services.push_back(f[1]);
      }
      r.service = it->second;
      r.external_rps = std::stod(f[2]);
      r.service_rps = std::stod(f[3]);
      r.pods = std::stoi(f[4]);
      r.utilization = std::stod(f[5]);
      r.overloaded = f[6] == "1";
      log.policy = f[7];
      r.decision_delta = std::stoi(f[8]);
      log.rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ReportError("simulation CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  if (log.services.empty()) throw ReportError("simulation CSV: no rows");
  if (log.rows.size() % log.services.size() != 0) throw ReportError("simulation CSV: ragged minutes");
  log.start = static_cast<std::size_t>(first_minute);
  log.horizon = log.rows.size() / log.services.size();
  return log;
}

/// External request series of a parsed log, one value per minute.
inline std::vector<double> external_series(const SimulationLog& log) {
  std::vector<double> out;
  for (std::size_t i = 0; i < log.rows.size(); i += log.services.size()) out.push_back(log.rows[i].external_rps);
  return out;
}

/// Throws ReportError if the summary disagrees with the per-minute CSV.
inline void check_summary_consistency(const RunSummary& s, const SimulationLog& csv) {
  const auto fail = [&](const std::string& what) {
    throw ReportError("summary for '" + s.policy + "' disagrees with its CSV on " + what);
  };
  if (csv.policy != s.policy) fail("policy");
  if (csv.services != s.services) fail("services");
  if (csv.start != s.start || csv.horizon != s.horizon) fail("minute range");
  if (csv.pod_minutes() != s.pod_minutes) fail("pod_minutes");
  if (csv.overload_minutes() != s.overload_minutes) fail("overload_minutes");
  if (csv.peak_total_pods() != s.peak_total_pods) fail("peak_total_pods");
  if (std::abs(csv.mean_utilization() - s.mean_utilization) > 2e-6) fail("mean_utilization");
  if (trace_digest(external_series(csv)) != s.trace_digest) fail("trace_digest");
}

/// Percent of base pod-minutes saved by the candidate; 0 when base is 0.
inline double savings_percent(long long base_pod_minutes, long long candidate_pod_minutes) {
  if (base_pod_minutes <= 0) return 0.0;
  return static_cast<double>(base_pod_minutes - candidate_pod_minutes) /
         static_cast<double>(base_pod_minutes) * 100.0;
}

struct ComparisonRow {
  std::string policy;
  long long pod_minutes = 0;
  long long overload_minutes = 0;
  double mean_utilization = 0.0;
  double savings_percent = 0.0;
};

struct ComparisonSummary {
  std::string baseline;
  std::vector<ComparisonRow> rows;
};

inline void require_comparable(const RunSummary& a, const RunSummary& b) {
  if (a.trace_id != b.trace_id) throw RunMismatchError("trace", a.trace_id, b.trace_id);
  if (a.trace_digest != b.trace_digest) {
    throw RunMismatchError("trace_digest", std::to_string(a.trace_digest), std::to_string(b.trace_digest));
  }
  if (a.start != b.start) throw RunMismatchError("start", std::to_string(a.start), std::to_string(b.start));
  if (a.horizon != b.horizon) throw RunMismatchError("horizon", std::to_string(a.horizon), std::to_string(b.horizon));
  if (a.seed != b.seed) throw RunMismatchError("seed", std::to_string(a.seed), std::to_string(b.seed));
  if (a.services != b.services) throw RunMismatchError("services", "[...]", "[...]");
}

/// runs[baseline] is the reference for savings.
inline ComparisonSummary compare_runs(const std::vector<RunSummary>& runs, std::size_t baseline = 0) {
  if (runs.size() < 2) throw ReportError("compare: need at least two runs");
  if (baseline >= runs.size()) throw ReportError("compare: baseline index out of range");
  for (std::size_t i = 1; i < runs.size(); ++i) require_comparable(runs[0], runs[i]);
  ComparisonSummary out;
  out.baseline = runs[baseline].policy;
  for (const auto& r : runs) {
    out.rows.push_back({r.policy, r.pod_minutes, r.overload_minutes, r.mean_utilization,
                        savings_percent(runs[baseline].pod_minutes, r.pod_minutes)});
  }
  return out;
}

inline nlohmann::json comparison_to_json(const ComparisonSummary& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"policy", r.policy},
                    {"pod_minutes", r.pod_minutes},
                    {"overload_minutes", r.overload_minutes},
                    {"mean_utilization", round6(r.mean_utilization)},
                    {"savings_percent", round6(r.savings_percent)}});
  }
  return {{"baseline", c.baseline}, {"policies", rows}};
}

inline std::string format_comparison_table(const ComparisonSummary& c) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %12s %10s %10s %10s\n", "policy", "pod-minutes", "overload",
                "mean-util", "savings%");
  out += buf;
  for (const auto& r : c.rows) {
    std::snprintf(buf, sizeof buf, "%-16s %12lld %10lld %10.4f %10.2f\n", r.policy.c_str(),
                  r.pod_minutes, r.overload_minutes, r.mean_utilization, r.savings_percent);
    out += buf;
  }
  out += "savings relative to " + c.baseline + "\n";
  return out;
}

struct PodSeries {
  std::string policy;
  std::vector<int> pods;
};

/// Line chart of pod counts over the run, one polyline per policy.
inline std::string pods_svg(const std::string& service, std::size_t start_minute,
                            const std::vector<PodSeries>& series) {
  constexpr double kW = 800, kH = 320, kLeft = 50, kRight = 150, kTop = 30, kBottom = 40;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::size_t len = 1;
  int top = 1;
  for (const auto& s : series) {
    len = std::max(len, s.pods.size());
    for (int p : s.pods) top = std::max(top, p);
  }
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  const auto x_of = [&](std::size_t i) { return kLeft + pw * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(len - 1, 1)); };
  const auto y_of = [&](int p) { return kTop + ph * (1.0 - static_cast<double>(p) / top); };
  const auto num = [](double v) { return format_double(v, 2); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) +
         "\" viewBox=\"0 0 " + num(kW) + " " + num(kH) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kLeft) + "\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">pods: " +
         service + "</text>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) +
         "\" y2=\"" + num(kTop + ph) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
         num(kTop + ph) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(kTop + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + std::to_string(top) + "</text>\n";
  out += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(kTop + ph + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">0</text>\n";
  out += "<text x=\"" + num(kLeft) + "\" y=\"" + num(kH - 12) +
         "\" font-family=\"sans-serif\" font-size=\"11\">minute " + std::to_string(start_minute) + "</text>\n";
  out += "<text x=\"" + num(kLeft + pw) + "\" y=\"" + num(kH - 12) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">minute " +
         std::to_string(start_minute + len - 1) + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    out += "<polyline class=\"policy\" data-policy=\"" + series[s].policy + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].pods.size(); ++i) {
      if (i > 0) out += ' ';
      out += num(x_of(i)) + "," + num(y_of(series[s].pods[i]));
    }
    out += "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s);
    out += "<line x1=\"" + num(kLeft + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(kLeft + pw + 30) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(kLeft + pw + 34) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + series[s].policy + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace gphpa
