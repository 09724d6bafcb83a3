#pragma once

// The phpa command-line tool: gen-trace, train-workload, train-resource,
// simulate and compare. run() returns the process exit code: 0 on success,
// 1 on runtime errors, 2 on usage errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gphpa/config.hpp"
#include "gphpa/log.hpp"
#include "gphpa/model_io.hpp"
#include "gphpa/pipeline.hpp"
#include "gphpa/report.hpp"

namespace gphpa::cli {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes and reads back; a short or failed write is an error.
inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
  }
  std::ifstream back(path, std::ios::binary);
  std::ostringstream os;
  os << back.rdbuf();
  if (os.str() != text) throw std::runtime_error("verification of '" + path.string() + "' failed");
  log::debug("wrote ", path.string());
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

inline std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline nlohmann::json metrics_json(const ErrorMetrics& m) { return {{"mse", m.mse}, {"mae", m.mae}}; }

inline std::string history_csv(const std::vector<std::string>& names,
                               const std::vector<std::vector<EpochLoss>>& histories) {
  std::string out = "model,epoch,train_loss,valid_loss\n";
  for (std::size_t i = 0; i < histories.size(); ++i) {
    for (const auto& e : histories[i]) {
      out += names[i] + ',' + std::to_string(e.epoch) + ',' + format_double(e.train, 9) + ',' +
             (std::isnan(e.valid) ? std::string() : format_double(e.valid, 9)) + '\n';
    }
  }
  return out;
}

struct Options {
  std::string config;
  std::string policy;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  std::string out;
  // gen-trace
  std::string pattern;
  std::optional<std::size_t> length;
  std::optional<double> period;
  // compare
  std::vector<std::string> runs;
  std::string baseline;
};

inline ExperimentConfig load_with_overrides(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  ExperimentConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) {
    c.output_dir = fs::absolute(o.out).lexically_normal().string();
    c.models_dir.clear();
  }
  return c;
}

inline int cmd_gen_trace(const Options& o, std::ostream& out) {
  SyntheticTraceSpec spec;
  if (!o.config.empty()) {
    const ExperimentConfig c = load_config(o.config);
    if (!c.trace.synthetic) throw UsageError("config trace is not synthetic");
    spec = *c.trace.synthetic;
  }
  if (!o.pattern.empty()) spec.pattern = trace_pattern_from_string(o.pattern);
  if (o.length) spec.length = *o.length;
  if (o.period) spec.period = *o.period;
  if (o.seed) spec.seed = *o.seed;
  if (o.out.empty()) throw UsageError("--out is required");
  const fs::path path = fs::path(o.out) / "trace.csv";
  write_text(path, format_trace_csv(generate_synthetic_trace(spec)));
  out << "wrote " << path.string() << " (" << spec.length << " bins, " << to_string(spec.pattern) << ")\n";
  return 0;
}

inline int cmd_train_workload(const Options& o, std::ostream& out) {
  const ExperimentConfig c = load_with_overrides(o);
  const ExperimentData d = prepare_data(c);
  const auto t = train_workload_models(d, c);
  const fs::path models = c.models_path();
  nlohmann::json metrics = nlohmann::json::object();
  for (std::size_t i = 0; i < d.graph.size(); ++i) {
    const auto& name = d.graph.nodes()[i];
    write_json(lstm_model_path(models.string(), name), lstm_to_json(t.models[i], name));
    const auto& m = t.metrics[i];
    metrics[name] = {{"train", metrics_json(m.train)},
                     {"valid", metrics_json(m.valid)},
                     {"test", metrics_json(m.test)},
                     {"persistence_test", metrics_json(m.persistence_test)}};
  }
  const fs::path dir = c.output_dir;
  write_json(dir / "workload_metrics.json", {{"trace", d.trace_id}, {"seed", c.seed}, {"services", metrics}});
  write_text(dir / "workload_history.csv", history_csv(d.graph.nodes(), t.histories));
  for (std::size_t i = 0; i < d.graph.size(); ++i) {
    out << d.graph.nodes()[i] << ": test mse " << t.metrics[i].test.mse << ", persistence "
        << t.metrics[i].persistence_test.mse << "\n";
  }
  return 0;
}

inline int cmd_train_resource(const Options& o, std::ostream& out) {
  const ExperimentConfig c = load_with_overrides(o);
  const ExperimentData d = prepare_data(c);
  const auto workload = load_workload_models(c.models_path(), d.graph, c.lstm.window);
  const auto r = train_resource_model(d, c, workload);
  write_json(gcn_model_path(c.models_path()), gcn_to_json(r.model));
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t i = 0; i < d.graph.size(); ++i) {
    per[d.graph.nodes()[i]] = {{"train", r.node_mse_train[i]},
                               {"valid", r.node_mse_valid[i]},
                               {"test", r.node_mse_test[i]}};
  }
  const nlohmann::json metrics = {{"trace", d.trace_id},
                                  {"seed", c.seed},
                                  {"mse", {{"train", mean_of(r.node_mse_train)},
                                           {"valid", mean_of(r.node_mse_valid)},
                                           {"test", mean_of(r.node_mse_test)}}},
                                  {"target_variance_train", r.target_variance_train},
                                  {"per_node_mse", per}};
  const fs::path dir = c.output_dir;
  write_json(dir / "resource_metrics.json", metrics);
  write_text(dir / "resource_history.csv", history_csv({"gcn"}, {r.history}));
  out << "resource model: train mse " << mean_of(r.node_mse_train) << ", test mse "
      << mean_of(r.node_mse_test) << "\n";
  return 0;
}

inline void write_run(const fs::path& dir, const SimulationLog& log, const ExperimentData& d,
                      const ExperimentConfig& c, std::ostream& out) {
  const std::size_t start = log.start;
  const std::span<const double> slice(d.external.data() + start, log.horizon);
  const RunSummary s = summarize(log, d.trace_id, trace_digest(slice), c.seed);
  write_text(dir / "simulation.csv", format_simulation_csv(log));
  if (!log.decisions.empty()) write_text(dir / "decisions.csv", format_decision_csv(log));
  write_json(dir / "summary.json", summary_to_json(s));
  check_summary_consistency(summary_from_json(nlohmann::json::parse(read_text(dir / "summary.json"))),
                            parse_simulation_csv(read_text(dir / "simulation.csv")));
  out << log.policy << ": pod-minutes " << s.pod_minutes << ", overload-minutes " << s.overload_minutes
      << " -> " << dir.string() << "\n";
}

inline int cmd_simulate(const Options& o, std::ostream& out) {
  const ExperimentConfig c = load_with_overrides(o);
  const ExperimentData d = prepare_data(c);
  const fs::path dir = c.output_dir;
  if (o.policy == "reactive") {
    std::vector<double> thresholds = o.threshold ? std::vector<double>{*o.threshold} : c.thresholds;
    for (double t : thresholds) {
      if (!(t > c.scale_in && t <= 1.0)) {
        throw UsageError("--threshold must lie in (scale_in, 1], got " + std::to_string(t));
      }
      const auto log = simulate_policy(d, c, Policy::reactive(c.hpa(t)));
      write_run(dir / log.policy, log, d, c, out);
    }
    return 0;
  }
  if (o.policy == "graph-phpa") {
    if (o.threshold) throw UsageError("--threshold applies only to the reactive policy");
    const PolicyModels models = load_policy_models(c.models_path(), d.graph, c.lstm.window);
    const auto log = simulate_policy(d, c, Policy::graph_phpa(models, c.tracking));
    write_run(dir / log.policy, log, d, c, out);
    return 0;
  }
  throw UsageError("unknown policy '" + o.policy + "' (reactive|graph-phpa)");
}

inline int cmd_compare(const Options& o, std::ostream& out) {
  if (o.runs.size() < 2) throw UsageError("compare needs at least two run directories");
  if (o.out.empty()) throw UsageError("--out is required");
  std::vector<RunSummary> summaries;
  std::vector<SimulationLog> logs;
  for (const auto& r : o.runs) {
    const fs::path dir(r);
    auto s = summary_from_json(nlohmann::json::parse(read_text(dir / "summary.json")));
    auto l = parse_simulation_csv(read_text(dir / "simulation.csv"));
    check_summary_consistency(s, l);
    summaries.push_back(std::move(s));
    logs.push_back(std::move(l));
  }
  std::size_t baseline = 0;
  if (!o.baseline.empty()) {
    baseline = summaries.size();
    for (std::size_t i = 0; i < summaries.size(); ++i)
      if (summaries[i].policy == o.baseline) baseline = i;
    if (baseline == summaries.size()) throw UsageError("no run has policy '" + o.baseline + "'");
  }
  const ComparisonSummary cmp = compare_runs(summaries, baseline);
  const fs::path dir(o.out);
  write_json(dir / "comparison.json", comparison_to_json(cmp));
  const std::string table = format_comparison_table(cmp);
  write_text(dir / "comparison.txt", table);
  for (std::size_t svc = 0; svc < summaries[0].services.size(); ++svc) {
    std::vector<PodSeries> series;
    for (const auto& l : logs) series.push_back({l.policy, l.pods_of(svc)});
    const auto& name = summaries[0].services[svc];
    write_text(dir / ("pods_" + name + ".svg"), pods_svg(name, summaries[0].start, series));
  }
  out << table;
  return 0;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Proactive graph-aware autoscaling experiments"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  double threshold = 0.0;
  std::size_t length = 0;
  double period = 0.0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--seed", seed, "experiment seed override");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* gen = app.add_subcommand("gen-trace", "write a synthetic trace.csv");
  add_common(gen);
  gen->add_option("--pattern", o.pattern, "sine | diurnal | bursty");
  gen->add_option("--length", length, "number of bins");
  gen->add_option("--period", period, "minutes per cycle (sine, diurnal)");
  auto* tw = app.add_subcommand("train-workload", "train one workload forecaster per service");
  add_common(tw);
  auto* tr = app.add_subcommand("train-resource", "train the graph resource model");
  add_common(tr);
  auto* sim = app.add_subcommand("simulate", "replay the test window under a policy");
  add_common(sim);
  sim->add_option("--policy", o.policy, "reactive | graph-phpa")->required();
  sim->add_option("--threshold", threshold, "reactive scale-out utilization threshold");
  auto* cmp = app.add_subcommand("compare", "compare simulate runs");
  cmp->add_option("runs", o.runs, "run directories holding summary.json and simulation.csv")->required();
  cmp->add_option("--out", o.out, "output directory")->required();
  cmp->add_option("--baseline", o.baseline, "policy label used as the savings reference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  for (auto* sub : {gen, tw, tr, sim}) {
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;
  }
  if (gen->count("--length") > 0) o.length = length;
  if (gen->count("--period") > 0) o.period = period;
  if (sim->count("--threshold") > 0) o.threshold = threshold;
  if (sim->parsed() && o.policy == "graph_phpa") o.policy = "graph-phpa";

  try {
    if (gen->parsed()) return cmd_gen_trace(o, out);
    if (tw->parsed()) return cmd_train_workload(o, out);
    if (tr->parsed()) return cmd_train_resource(o, out);
    if (sim->parsed()) return cmd_simulate(o, out);
    if (cmp->parsed()) return cmd_compare(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gphpa::cli
