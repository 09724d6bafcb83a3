#pragma once

// Workload traces: CSV ingestion, 5-minute to 1-minute apportionment,
// rescaling, chronological splitting and synthetic generation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gphpa/rng.hpp"

namespace gphpa {

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceBin {
  std::int64_t minute = 0;
  std::int64_t requests = 0;
  friend bool operator==(const TraceBin&, const TraceBin&) = default;
};

/// Request counts on a contiguous minute grid. A bin at resolution r covers
/// minutes [minute, minute + r).
struct WorkloadTrace {
  int resolution = 1;
  std::vector<TraceBin> bins;

  std::size_t size() const noexcept { return bins.size(); }

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(bins.size());
    for (const auto& b : bins) out.push_back(static_cast<double>(b.requests));
    return out;
  }

  friend bool operator==(const WorkloadTrace&, const WorkloadTrace&) = default;
};

/// Throws TraceError on negative counts or non-contiguous minutes.
inline void validate_trace(const WorkloadTrace& trace) {
  if (trace.resolution < 1) throw TraceError("trace resolution must be >= 1");
  for (std::size_t i = 0; i < trace.bins.size(); ++i) {
    const auto& b = trace.bins[i];
    if (b.requests < 0) {
      throw TraceError("negative request count " + std::to_string(b.requests) + " at minute " +
                       std::to_string(b.minute));
    }
    if (i > 0) {
      const auto expected = trace.bins[i - 1].minute + trace.resolution;
      if (b.minute != expected) {
        throw TraceError("non-contiguous minutes: expected " + std::to_string(expected) +
                         " after " + std::to_string(trace.bins[i - 1].minute) + ", found " +
                         std::to_string(b.minute));
      }
    }
  }
}

namespace detail {

inline bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

}  // namespace detail

/// Parses `minute,requests` CSV text. The resolution is inferred from the
/// first two minutes unless given.
inline WorkloadTrace parse_trace_csv(const std::string& text, int resolution = 0) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw TraceError("trace: empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "minute,requests") {
    throw TraceError("trace: line 1: expected header 'minute,requests', found '" + line + "'");
  }
  WorkloadTrace trace;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    std::int64_t minute = 0;
    std::int64_t requests = 0;
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos ||
        !detail::parse_int(line.substr(0, comma), minute) ||
        !detail::parse_int(line.substr(comma + 1), requests)) {
      throw TraceError("trace: line " + std::to_string(line_no) + ": malformed row '" + line +
                       "'");
    }
    trace.bins.push_back({minute, requests});
  }
  if (resolution > 0) {
    trace.resolution = resolution;
  } else if (trace.bins.size() >= 2) {
    const auto step = trace.bins[1].minute - trace.bins[0].minute;
    if (step < 1) throw TraceError("trace: minutes must be strictly increasing");
    trace.resolution = static_cast<int>(step);
  }
  validate_trace(trace);
  return trace;
}

inline WorkloadTrace load_trace(const std::string& path, int resolution = 0) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw TraceError("trace: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trace_csv(ss.str(), resolution);
}

inline std::string format_trace_csv(const WorkloadTrace& trace) {
  std::string out = "minute,requests\n";
  for (const auto& b : trace.bins) {
    out += std::to_string(b.minute);
    out += ',';
    out += std::to_string(b.requests);
    out += '\n';
  }
  return out;
}

inline void save_trace(const WorkloadTrace& trace, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw TraceError("trace: cannot write '" + path + "'");
  f << format_trace_csv(trace);
}

/// Spreads each 5-minute bin over five 1-minute bins.
///
/// Inside a bin the shape follows the linear ramp between the neighbouring
/// bin midpoints (flat at the edges of the trace); the bin total is then
/// apportioned to integers by largest remainder, so every source bin's sum is
/// preserved exactly.
inline WorkloadTrace interpolate_to_minutes(const WorkloadTrace& trace) {
  constexpr int kSub = 5;
  if (trace.resolution != kSub) {
    throw TraceError("interpolate_to_minutes: expected 5-minute resolution, got " +
                     std::to_string(trace.resolution));
  }
  validate_trace(trace);
  WorkloadTrace out;
  out.resolution = 1;
  out.bins.reserve(trace.bins.size() * kSub);
  const std::size_t n = trace.bins.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double c = static_cast<double>(trace.bins[i].requests);
    const double prev = i > 0 ? static_cast<double>(trace.bins[i - 1].requests) : c;
    const double next = i + 1 < n ? static_cast<double>(trace.bins[i + 1].requests) : c;

    // Ramp value at sub-minute centres (s + 0.5) / 5, bin midpoint at 0.5.
    std::array<double, kSub> weight{};
    double total_w = 0.0;
    for (int s = 0; s < kSub; ++s) {
      const double pos = (s + 0.5) / kSub - 0.5;  // in (-0.5, 0.5)
      const double v = pos < 0.0 ? c + (c - prev) * pos : c + (next - c) * pos;
      weight[s] = std::max(v, 0.0);
      total_w += weight[s];
    }
    std::array<std::int64_t, kSub> share{};
    std::array<std::pair<double, int>, kSub> remainders{};
    std::int64_t assigned = 0;
    for (int s = 0; s < kSub; ++s) {
      const double exact = total_w > 0.0 ? c * weight[s] / total_w : c / kSub;
      share[s] = static_cast<std::int64_t>(std::floor(exact));
      remainders[s] = {exact - static_cast<double>(share[s]), s};
      assigned += share[s];
    }
    // Ties break toward the earlier minute.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    auto left = trace.bins[i].requests - assigned;
    for (int r = 0; left > 0; r = (r + 1) % kSub, --left) share[remainders[r].second] += 1;

    for (int s = 0; s < kSub; ++s) out.bins.push_back({trace.bins[i].minute + s, share[s]});
  }
  return out;
}

/// Linear rescale so that the peak bin equals round(target_peak).
inline WorkloadTrace rescale_trace(const WorkloadTrace& trace, double target_peak) {
  if (!(target_peak > 0.0)) throw TraceError("rescale_trace: target peak must be > 0");
  if (trace.bins.empty()) throw TraceError("rescale_trace: empty trace");
  std::int64_t peak = 0;
  for (const auto& b : trace.bins) peak = std::max(peak, b.requests);
  if (peak == 0) throw TraceError("rescale_trace: all-zero trace cannot be rescaled");
  const double factor = target_peak / static_cast<double>(peak);
  WorkloadTrace out = trace;
  for (auto& b : out.bins) {
    b.requests = static_cast<std::int64_t>(std::llround(static_cast<double>(b.requests) * factor));
  }
  return out;
}

struct SplitSizes {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

/// 60/20/20 chronological sizes: floor, floor, remainder.
inline SplitSizes split_sizes(std::size_t n) {
  if (n < 5) throw std::invalid_argument("split_dataset: need at least 5 samples, got " +
                                         std::to_string(n));
  SplitSizes s;
  s.train = n * 6 / 10;
  s.valid = n * 2 / 10;
  s.test = n - s.train - s.valid;
  return s;
}

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> valid;
  std::vector<T> test;
};

template <typename T>
Split<T> split_dataset(const std::vector<T>& samples) {
  const auto s = split_sizes(samples.size());
  Split<T> out;
  const auto b = samples.begin();
  out.train.assign(b, b + static_cast<std::ptrdiff_t>(s.train));
  out.valid.assign(b + static_cast<std::ptrdiff_t>(s.train),
                   b + static_cast<std::ptrdiff_t>(s.train + s.valid));
  out.test.assign(b + static_cast<std::ptrdiff_t>(s.train + s.valid), samples.end());
  return out;
}

enum class TracePattern { kSine, kDiurnal, kBursty };

inline TracePattern trace_pattern_from_string(const std::string& s) {
  if (s == "sine") return TracePattern::kSine;
  if (s == "diurnal") return TracePattern::kDiurnal;
  if (s == "bursty") return TracePattern::kBursty;
  throw std::invalid_argument("unknown trace pattern '" + s + "' (sine|diurnal|bursty)");
}

inline std::string to_string(TracePattern p) {
  switch (p) {
    case TracePattern::kSine: return "sine";
    case TracePattern::kDiurnal: return "diurnal";
    case TracePattern::kBursty: return "bursty";
  }
  return "sine";
}

struct SyntheticTraceSpec {
  TracePattern pattern = TracePattern::kDiurnal;
  std::size_t length = 4000;
  double amplitude = 300.0;
  double base = 100.0;
  std::uint64_t seed = 1;
  int resolution = 1;
  /// Minutes per cycle for sine and diurnal.
  double period = 1440.0;
  /// Gaussian noise standard deviation as a fraction of the amplitude.
  double noise = 0.05;
  /// Expected bursts per 1000 bins (bursty only).
  double burst_rate = 4.0;
};

/// Deterministic given the spec. Amplitude 0 yields a constant trace at
/// round(base), since the noise term scales with the amplitude.
inline WorkloadTrace generate_synthetic_trace(const SyntheticTraceSpec& spec) {
  if (spec.length < 1) throw std::invalid_argument("generate_synthetic_trace: length must be >= 1");
  if (spec.resolution < 1) throw std::invalid_argument("generate_synthetic_trace: resolution < 1");
  if (!(spec.period > 0.0)) throw std::invalid_argument("generate_synthetic_trace: period <= 0");
  Rng rng(spec.seed);
  WorkloadTrace trace;
  trace.resolution = spec.resolution;
  trace.bins.reserve(spec.length);
  const double two_pi = 2.0 * std::numbers::pi;
  double burst = 0.0;
  const double burst_p = spec.burst_rate / 1000.0;
  // Burst decay per bin: half-life of 15 minutes.
  const double decay = std::pow(0.5, spec.resolution / 15.0);
  for (std::size_t i = 0; i < spec.length; ++i) {
    const double minute = static_cast<double>(i) * spec.resolution;
    const double phase = two_pi * minute / spec.period;
    double level = spec.base;
    switch (spec.pattern) {
      case TracePattern::kSine:
        level += spec.amplitude * 0.5 * (1.0 + std::sin(phase));
        break;
      case TracePattern::kDiurnal:
        // Daily swell with a smaller second-harmonic shoulder.
        level += spec.amplitude * (0.5 * (1.0 - std::cos(phase)) * 0.8 +
                                   0.2 * 0.5 * (1.0 - std::cos(2.0 * phase)));
        break;
      case TracePattern::kBursty: {
        level += spec.amplitude * 0.4 * 0.5 * (1.0 - std::cos(phase));
        if (rng.uniform() < burst_p) burst += spec.amplitude * rng.uniform(0.3, 0.6);
        level += burst;
        burst *= decay;
        break;
      }
    }
    const double noisy = level + spec.noise * spec.amplitude * rng.normal();
    const auto count = static_cast<std::int64_t>(std::llround(std::max(noisy, 0.0)));
    trace.bins.push_back({static_cast<std::int64_t>(i) * spec.resolution, count});
  }
  return trace;
}

}  // namespace gphpa
