#pragma once

// End-to-end experiment steps shared by the command-line tool and the tests:
// load the workload, train the per-service forecasters, train the resource
// model on simulator ground truth, and replay the test window under a policy.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gphpa/autoscaler.hpp"
#include "gphpa/cluster_sim.hpp"
#include "gphpa/config.hpp"
#include "gphpa/forecast_lstm.hpp"
#include "gphpa/graph.hpp"
#include "gphpa/log.hpp"
#include "gphpa/model_io.hpp"
#include "gphpa/predict_gcn.hpp"
#include "gphpa/traces.hpp"

namespace gphpa {

class MissingModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentData {
  ServiceGraph graph;
  std::vector<double> external;             // per-minute external requests
  DemandModel demand;
  std::vector<std::vector<double>> rates;   // [service][minute]
  std::vector<std::vector<double>> usage;   // [service][minute], vCPU
  std::string trace_id;
};

inline std::string describe_trace(const ExperimentConfig& c) {
  if (c.trace.file) return std::filesystem::path(*c.trace.file).filename().string();
  const auto& s = *c.trace.synthetic;
  return "synthetic:" + to_string(s.pattern) + ":" + std::to_string(s.length) + ":" +
         std::to_string(s.seed);
}

inline ExperimentData prepare_data(const ExperimentConfig& c, const ServiceGraph& graph) {
  ExperimentData d{graph, load_experiment_trace(c).values(), c.demand_model(), {}, {}, describe_trace(c)};
  d.demand.validate(graph);
  d.rates = simulate_workloads(graph, d.external, d.demand);
  d.usage = resource_usage(graph, d.rates, d.demand);
  return d;
}

inline ExperimentData prepare_data(const ExperimentConfig& c) {
  return prepare_data(c, load_graph(c.graph_path));
}

struct SplitMetrics {
  ErrorMetrics train;
  ErrorMetrics valid;
  ErrorMetrics test;
  ErrorMetrics persistence_test;
};

struct WorkloadTraining {
  std::vector<LstmModel> models;
  std::vector<SplitMetrics> metrics;
  std::vector<std::vector<EpochLoss>> histories;
};

inline WorkloadTraining train_workload_models(const ExperimentData& d, const ExperimentConfig& c) {
  WorkloadTraining out;
  for (std::size_t i = 0; i < d.graph.size(); ++i) {
    const auto windows = make_windows(d.rates[i], c.lstm.window);
    const auto sp = split_dataset(windows);
    log::info("training workload model for ", d.graph.nodes()[i], " on ", sp.train.size(), " windows");
    auto r = train_lstm(sp.train, sp.valid, c.lstm_for(i));
    SplitMetrics m;
    m.train = evaluate(lstm_predict(r.model, sp.train), targets_of(sp.train));
    m.valid = evaluate(lstm_predict(r.model, sp.valid), targets_of(sp.valid));
    m.test = evaluate(lstm_predict(r.model, sp.test), targets_of(sp.test));
    m.persistence_test = evaluate(persistence_forecast(sp.test), targets_of(sp.test));
    log::info(d.graph.nodes()[i], ": test mse ", m.test.mse, " (persistence ", m.persistence_test.mse, ")");
    out.models.push_back(std::move(r.model));
    out.metrics.push_back(m);
    out.histories.push_back(std::move(r.history));
  }
  return out;
}

inline std::vector<ResourceSample> resource_samples(const ExperimentData& d,
                                                    const std::vector<LstmModel>& models,
                                                    std::size_t k) {
  std::vector<std::vector<double>> forecasts;
  for (std::size_t i = 0; i < d.graph.size(); ++i) {
    forecasts.push_back(lstm_predict(models[i], make_windows(d.rates[i], k)));
  }
  return build_resource_dataset(d.rates, d.usage, forecasts, k);
}

struct ResourceTraining {
  GcnModel model;
  std::vector<EpochLoss> history;
  std::vector<double> node_mse_train, node_mse_valid, node_mse_test;
  double target_variance_train = 0.0;
};

inline double variance_of_targets(const std::vector<ResourceSample>& samples) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    for (double v : s.targets) {
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  return std::max(0.0, sq / static_cast<double>(n) - mean * mean);
}

inline ResourceTraining train_resource_model(const ExperimentData& d, const ExperimentConfig& c,
                                             const std::vector<LstmModel>& workload_models) {
  const auto samples = resource_samples(d, workload_models, c.lstm.window);
  const auto sp = split_dataset(samples);
  log::info("training resource model on ", sp.train.size(), " samples");
  auto r = train_gcn(sp.train, sp.valid, d.graph, c.gcn_config());
  ResourceTraining out{std::move(r.model), std::move(r.history), {}, {}, {}, 0.0};
  out.node_mse_train = per_node_mse(out.model, d.graph, sp.train);
  out.node_mse_valid = per_node_mse(out.model, d.graph, sp.valid);
  out.node_mse_test = per_node_mse(out.model, d.graph, sp.test);
  out.target_variance_train = variance_of_targets(sp.train);
  return out;
}

inline std::string lstm_model_path(const std::string& dir, const std::string& service) {
  return (std::filesystem::path(dir) / ("lstm_" + service + ".json")).string();
}

inline std::string gcn_model_path(const std::string& dir) {
  return (std::filesystem::path(dir) / "gcn.json").string();
}

inline std::vector<LstmModel> load_workload_models(const std::string& dir, const ServiceGraph& g,
                                                   std::size_t window) {
  std::vector<LstmModel> out;
  for (const auto& name : g.nodes()) {
    const auto path = lstm_model_path(dir, name);
    if (!std::filesystem::exists(path)) {
      throw MissingModelError("workload model '" + path + "' not found; run train-workload first");
    }
    out.push_back(lstm_from_json(read_json_file(path)));
    if (out.back().config.window != window) {
      throw MissingModelError("workload model '" + path + "' has window " +
                              std::to_string(out.back().config.window) + ", config expects " +
                              std::to_string(window) + "; retrain with train-workload");
    }
  }
  return out;
}

inline PolicyModels load_policy_models(const std::string& dir, const ServiceGraph& g,
                                       std::size_t window) {
  PolicyModels m;
  m.workload = load_workload_models(dir, g, window);
  const auto path = gcn_model_path(dir);
  if (!std::filesystem::exists(path)) {
    throw MissingModelError("resource model '" + path + "' not found; run train-resource first");
  }
  m.resource = gcn_from_json(read_json_file(path));
  if (m.resource.feature_scalers.size() != g.size()) {
    throw MissingModelError("resource model '" + path + "' was trained on a different graph");
  }
  return m;
}

/// Options for replaying the final `horizon` minutes of the trace.
inline SimulationOptions simulation_options(const ExperimentConfig& c, std::size_t trace_length) {
  if (c.horizon > trace_length) {
    throw ConfigError("config: horizon " + std::to_string(c.horizon) + " exceeds trace length " +
                      std::to_string(trace_length));
  }
  SimulationOptions o;
  o.start = trace_length - c.horizon;
  o.horizon = c.horizon;
  o.startup_delay = c.startup_delay;
  o.initial_pods = c.initial_pods;
  o.capacity = c.capacity;
  return o;
}

inline SimulationLog simulate_policy(const ExperimentData& d, const ExperimentConfig& c,
                                     const Policy& policy) {
  auto log = run_simulation(d.external, d.graph, d.demand, c.bounds_for(d.graph), policy,
                            simulation_options(c, d.external.size()));
  if (log.capacity_warnings > 0) {
    log::warn(log.policy, ": cluster capacity limited scale-out in ", log.capacity_warnings, " cases");
  }
  return log;
}

}  // namespace gphpa
