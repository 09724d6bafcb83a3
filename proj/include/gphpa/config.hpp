#pragma once

// Experiment configuration: one JSON document, unknown keys rejected.
// Relative paths resolve against the directory holding the config file.
//
// {
//   "graph": "graphs/bookinfo.json",
//   "trace": {"file": "traces/diurnal.csv", "peak": 400}
//        or {"synthetic": {"pattern": "diurnal", "length": 4000, ...}},
//   "demand": {"entry": "productpage", "vcpu_per_request": {...},
//              "fanout": [{"from": "...", "to": "...", "factor": 1.0}], "noise_sigma": 0.05},
//   "bounds": {"default": {...}, "<service>": {"max_pods": 20, "vcpu_lower": 0.1,
//              "vcpu_upper": 20, "pod_vcpu": 1}},
//   "lstm": {"window": 10, "layers": 1, "hidden_units": 50, "learning_rate": 0.01,
//            "epochs": 50, "batch_size": 64},
//   "gcn": {"layers": 2, "hidden_widths": [32], "learning_rate": 0.001, "epochs": 100,
//           "batch_size": 256, "scaling": "per_node"},
//   "hpa": {"thresholds": [0.9, 0.7], "scale_in": 0.3, "stabilization_minutes": 5},
//   "simulation": {"horizon": 800, "startup_delay": 1, "initial_pods": 1, "capacity": 79,
//                  "vcpu_tracking": "allocated"},
//   "seed": 42,
//   "output_dir": "out",
//   "models_dir": "out/models"
// }
//
// Every section except "graph" and "trace" is optional and falls back to the
// Bookinfo defaults.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gphpa/autoscaler.hpp"
#include "gphpa/cluster_sim.hpp"
#include "gphpa/forecast_lstm.hpp"
#include "gphpa/graph.hpp"
#include "gphpa/predict_gcn.hpp"
#include "gphpa/rng.hpp"
#include "gphpa/traces.hpp"

namespace gphpa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceSource {
  std::optional<std::string> file;
  std::optional<SyntheticTraceSpec> synthetic;
  std::optional<double> peak;  // rescale so the busiest bin equals this
};

struct ExperimentConfig {
  std::string graph_path;
  TraceSource trace;
  DemandModel demand = DemandModel::bookinfo();
  ServiceBounds default_bounds{20, 0.1, 20.0, 1.0};
  std::map<std::string, ServiceBounds> bounds;
  LstmConfig lstm;
  GcnConfig gcn;
  std::vector<double> thresholds{0.9, 0.7};
  double scale_in = 0.3;
  int stabilization_minutes = 5;
  std::size_t horizon = 800;
  int startup_delay = 1;
  int initial_pods = 1;
  int capacity = kBookinfoCapacity;
  VcpuTracking tracking = VcpuTracking::kAllocated;
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  std::string models_dir;  // empty: <output_dir>/models

  std::string models_path() const {
    return models_dir.empty() ? (std::filesystem::path(output_dir) / "models").string() : models_dir;
  }

  ScalingBounds bounds_for(const ServiceGraph& g) const {
    ScalingBounds out;
    for (const auto& n : g.nodes()) {
      const auto it = bounds.find(n);
      out.push_back(it == bounds.end() ? default_bounds : it->second);
    }
    return out;
  }

  HpaConfig hpa(double threshold) const { return {threshold, scale_in, stabilization_minutes}; }

  /// Per-model seeds derived from the experiment seed.
  LstmConfig lstm_for(std::size_t service) const {
    LstmConfig c = lstm;
    c.seed = derive_seed(seed, 1 + service);
    return c;
  }
  GcnConfig gcn_config() const {
    GcnConfig c = gcn;
    c.input_features = lstm.window;
    c.seed = derive_seed(seed, 1000);
    return c;
  }
  DemandModel demand_model() const {
    DemandModel d = demand;
    d.seed = derive_seed(seed, 2000);
    return d;
  }

  void validate() const {
    if (horizon < 1) throw ConfigError("config: simulation.horizon must be >= 1");
    if (thresholds.empty()) throw ConfigError("config: hpa.thresholds is empty");
    for (double t : thresholds) {
      if (!(t > 0.0 && t <= 1.0)) throw ConfigError("config: threshold " + std::to_string(t) + " outside (0, 1]");
      if (!(scale_in < t)) throw ConfigError("config: hpa.scale_in must be below every threshold");
    }
    if (!(scale_in > 0.0)) throw ConfigError("config: hpa.scale_in must be > 0");
    if (stabilization_minutes < 0) throw ConfigError("config: hpa.stabilization_minutes < 0");
    if (startup_delay < 1) throw ConfigError("config: simulation.startup_delay must be >= 1");
    if (initial_pods < 1) throw ConfigError("config: simulation.initial_pods must be >= 1");
    if (capacity < 1) throw ConfigError("config: simulation.capacity must be >= 1");
    if (trace.file.has_value() == trace.synthetic.has_value()) {
      throw ConfigError("config: trace needs exactly one of 'file' or 'synthetic'");
    }
    try {
      lstm.validate();
      gcn_config().validate();
      default_bounds.validate("bounds.default");
      for (const auto& [name, b] : bounds) b.validate("bounds." + name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
};

namespace config_detail {

inline void check_keys(const nlohmann::json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: " + where + "." + key + " has the wrong type");
  }
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

inline ServiceBounds read_bounds(const nlohmann::json& j, ServiceBounds b, const std::string& where) {
  check_keys(j, where, {"max_pods", "vcpu_lower", "vcpu_upper", "pod_vcpu"});
  read(j, "max_pods", b.max_pods, where);
  read(j, "vcpu_lower", b.vcpu_lower, where);
  read(j, "vcpu_upper", b.vcpu_upper, where);
  read(j, "pod_vcpu", b.pod_vcpu, where);
  return b;
}

inline SyntheticTraceSpec read_synthetic(const nlohmann::json& j) {
  const std::string where = "trace.synthetic";
  check_keys(j, where,
             {"pattern", "length", "amplitude", "base", "seed", "resolution", "period", "noise",
              "burst_rate"});
  SyntheticTraceSpec s;
  std::string pattern = to_string(s.pattern);
  read(j, "pattern", pattern, where);
  try {
    s.pattern = trace_pattern_from_string(pattern);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  read(j, "length", s.length, where);
  read(j, "amplitude", s.amplitude, where);
  read(j, "base", s.base, where);
  read(j, "seed", s.seed, where);
  read(j, "resolution", s.resolution, where);
  read(j, "period", s.period, where);
  read(j, "noise", s.noise, where);
  read(j, "burst_rate", s.burst_rate, where);
  return s;
}

}  // namespace config_detail

/// base_dir anchors relative paths.
inline ExperimentConfig config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = ".") {
  using namespace config_detail;
  check_keys(j, "config",
             {"graph", "trace", "demand", "bounds", "lstm", "gcn", "hpa", "simulation", "seed",
              "output_dir", "models_dir"});
  ExperimentConfig c;
  if (!j.contains("graph")) throw ConfigError("config: 'graph' is required");
  if (!j.contains("trace")) throw ConfigError("config: 'trace' is required");
  std::string graph;
  read(j, "graph", graph, "config");
  c.graph_path = resolve(base_dir, graph);

  const auto& t = j.at("trace");
  check_keys(t, "trace", {"file", "synthetic", "peak"});
  if (t.contains("file")) {
    std::string f;
    read(t, "file", f, "trace");
    c.trace.file = resolve(base_dir, f);
  }
  if (t.contains("synthetic")) c.trace.synthetic = read_synthetic(t.at("synthetic"));
  if (t.contains("peak")) {
    double p = 0.0;
    read(t, "peak", p, "trace");
    c.trace.peak = p;
  }

  if (j.contains("demand")) {
    const auto& d = j.at("demand");
    check_keys(d, "demand", {"entry", "vcpu_per_request", "fanout", "noise_sigma"});
    read(d, "entry", c.demand.entry, "demand");
    read(d, "vcpu_per_request", c.demand.vcpu_per_request, "demand");
    read(d, "noise_sigma", c.demand.noise_sigma, "demand");
    if (d.contains("fanout")) {
      c.demand.fanout.clear();
      for (const auto& f : d.at("fanout")) {
        check_keys(f, "demand.fanout[]", {"from", "to", "factor"});
        FanOut fo;
        read(f, "from", fo.from, "demand.fanout[]");
        read(f, "to", fo.to, "demand.fanout[]");
        read(f, "factor", fo.factor, "demand.fanout[]");
        c.demand.fanout.push_back(fo);
      }
    }
  }

  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (!b.is_object()) throw ConfigError("config: 'bounds' must be an object");
    if (b.contains("default")) c.default_bounds = read_bounds(b.at("default"), c.default_bounds, "bounds.default");
    for (const auto& [name, v] : b.items()) {
      if (name != "default") c.bounds[name] = read_bounds(v, c.default_bounds, "bounds." + name);
    }
  }

  if (j.contains("lstm")) {
    const auto& l = j.at("lstm");
    check_keys(l, "lstm", {"window", "layers", "hidden_units", "learning_rate", "epochs", "batch_size"});
    read(l, "window", c.lstm.window, "lstm");
    read(l, "layers", c.lstm.layers, "lstm");
    read(l, "hidden_units", c.lstm.hidden_units, "lstm");
    read(l, "learning_rate", c.lstm.learning_rate, "lstm");
    read(l, "epochs", c.lstm.epochs, "lstm");
    read(l, "batch_size", c.lstm.batch_size, "lstm");
  }
  if (j.contains("gcn")) {
    const auto& g = j.at("gcn");
    check_keys(g, "gcn", {"layers", "hidden_widths", "learning_rate", "epochs", "batch_size", "scaling"});
    read(g, "layers", c.gcn.layers, "gcn");
    if (g.contains("hidden_widths")) {
      read(g, "hidden_widths", c.gcn.hidden_widths, "gcn");
    } else {
      c.gcn.hidden_widths.assign(c.gcn.layers > 0 ? c.gcn.layers - 1 : 0, 32);
    }
    read(g, "learning_rate", c.gcn.learning_rate, "gcn");
    read(g, "epochs", c.gcn.epochs, "gcn");
    read(g, "batch_size", c.gcn.batch_size, "gcn");
    std::string scaling = to_string(c.gcn.scaling);
    read(g, "scaling", scaling, "gcn");
    try {
      c.gcn.scaling = gcn_scaling_from_string(scaling);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (j.contains("hpa")) {
    const auto& h = j.at("hpa");
    check_keys(h, "hpa", {"thresholds", "scale_in", "stabilization_minutes"});
    read(h, "thresholds", c.thresholds, "hpa");
    read(h, "scale_in", c.scale_in, "hpa");
    read(h, "stabilization_minutes", c.stabilization_minutes, "hpa");
  }
  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    check_keys(s, "simulation", {"horizon", "startup_delay", "initial_pods", "capacity", "vcpu_tracking"});
    read(s, "horizon", c.horizon, "simulation");
    read(s, "startup_delay", c.startup_delay, "simulation");
    read(s, "initial_pods", c.initial_pods, "simulation");
    read(s, "capacity", c.capacity, "simulation");
    std::string tracking = to_string(c.tracking);
    read(s, "vcpu_tracking", tracking, "simulation");
    try {
      c.tracking = vcpu_tracking_from_string(tracking);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  read(j, "seed", c.seed, "config");
  std::string out = c.output_dir;
  read(j, "output_dir", out, "config");
  c.output_dir = resolve(base_dir, out);
  if (j.contains("models_dir")) {
    std::string m;
    read(j, "models_dir", m, "config");
    c.models_dir = resolve(base_dir, m);
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  ExperimentConfig c = config_from_json(j, base);
  if (!std::filesystem::exists(c.graph_path)) {
    throw ConfigError("config: graph file '" + c.graph_path + "' does not exist");
  }
  if (c.trace.file && !std::filesystem::exists(*c.trace.file)) {
    throw ConfigError("config: trace file '" + *c.trace.file + "' does not exist");
  }
  return c;
}

/// The per-minute external request series the experiment replays.
inline WorkloadTrace load_experiment_trace(const ExperimentConfig& c) {
  WorkloadTrace t = c.trace.file ? load_trace(*c.trace.file) : generate_synthetic_trace(*c.trace.synthetic);
  if (t.resolution == 5) t = interpolate_to_minutes(t);
  if (t.resolution != 1) {
    throw TraceError("trace resolution " + std::to_string(t.resolution) + " is not supported (1 or 5)");
  }
  if (c.trace.peak) t = rescale_trace(t, *c.trace.peak);
  return t;
}

}  // namespace gphpa
