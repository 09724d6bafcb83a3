#pragma once

// Discrete-time cluster hosting a service graph. Each minute: the external
// request rate fans out along the call edges, per-pod utilization follows
// from the demand model, and a policy (reactive threshold HPA or the
// proactive pipeline) adjusts pod counts for the following minutes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gphpa/autoscaler.hpp"
#include "gphpa/graph.hpp"
#include "gphpa/rng.hpp"

namespace gphpa {

class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FanOut {
  std::string from;
  std::string to;
  double factor = 1.0;
  friend bool operator==(const FanOut&, const FanOut&) = default;
};

struct DemandModel {
  std::string entry = "productpage";
  /// vCPU-seconds per request, by service name.
  std::map<std::string, double> vcpu_per_request;
  /// Directed call edges; must form a DAG over graph edges.
  std::vector<FanOut> fanout;
  /// Log-normal multiplicative noise on each service's request rate.
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;

  /// Bookinfo defaults. Reviews round-robins over v1/v2/v3 and only v2 and v3
  /// call ratings, hence the 2/3 factor. productpage has the largest cost.
  static DemandModel bookinfo() {
    DemandModel d;
    d.entry = "productpage";
    d.vcpu_per_request = {
        {"productpage", 0.02}, {"details", 0.008}, {"reviews", 0.015}, {"ratings", 0.01}};
    d.fanout = {{"productpage", "details", 1.0},
                {"productpage", "reviews", 1.0},
                {"reviews", "ratings", 2.0 / 3.0}};
    d.noise_sigma = 0.05;
    return d;
  }

  double cost_of(const std::string& service) const {
    const auto it = vcpu_per_request.find(service);
    if (it == vcpu_per_request.end()) {
      throw TopologyError("demand model: no vcpu_per_request for service '" + service + "'");
    }
    return it->second;
  }

  void validate(const ServiceGraph& graph) const {
    if (!graph.contains(entry)) throw TopologyError("demand model: unknown entry node '" + entry + "'");
    for (const auto& [name, c] : vcpu_per_request) {
      if (!graph.contains(name)) throw TopologyError("demand model: unknown node '" + name + "'");
      if (!(c > 0.0)) throw TopologyError("demand model: vcpu_per_request for '" + name + "' must be > 0");
    }
    for (const auto& node : graph.nodes()) cost_of(node);
    for (const auto& f : fanout) {
      if (!graph.contains(f.from)) throw TopologyError("demand model: unknown node '" + f.from + "'");
      if (!graph.contains(f.to)) throw TopologyError("demand model: unknown node '" + f.to + "'");
      if (graph.adjacency()(graph.index_of(f.from), graph.index_of(f.to)) == 0.0) {
        throw TopologyError("demand model: call edge " + f.from + " -> " + f.to +
                            " is not an edge of the service graph");
      }
      if (!(f.factor >= 0.0)) throw TopologyError("demand model: fan-out factors must be >= 0");
    }
    if (!(noise_sigma >= 0.0)) throw TopologyError("demand model: noise_sigma must be >= 0");
  }
};

namespace sim_detail {

/// Kahn order over the call edges, ties broken by graph node order.
inline std::vector<std::size_t> call_order(const ServiceGraph& graph, const DemandModel& demand) {
  const std::size_t n = graph.size();
  std::vector<int> indegree(n, 0);
  for (const auto& f : demand.fanout) indegree[graph.index_of(f.to)] += 1;
  std::vector<std::size_t> order;
  std::vector<bool> done(n, false);
  while (order.size() < n) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || indegree[i] != 0) continue;
      done[i] = true;
      order.push_back(i);
      for (const auto& f : demand.fanout)
        if (graph.index_of(f.from) == i) indegree[graph.index_of(f.to)] -= 1;
      progressed = true;
      break;
    }
    if (!progressed) throw TopologyError("demand model: call edges contain a cycle");
  }
  return order;
}

}  // namespace sim_detail

/// Per-service request rate for one minute, in graph node order. When rng is
/// given and sigma > 0, each service's rate is multiplied by an independent
/// mean-one log-normal factor, drawn in node order.
inline std::vector<double> propagate_workload(const ServiceGraph& graph, double external_rps,
                                              const DemandModel& demand, Rng* rng = nullptr) {
  if (!(external_rps >= 0.0)) throw std::invalid_argument("propagate_workload: negative rate");
  demand.validate(graph);
  std::vector<double> rps(graph.size(), 0.0);
  rps[graph.index_of(demand.entry)] = external_rps;
  for (std::size_t i : sim_detail::call_order(graph, demand)) {
    for (const auto& f : demand.fanout) {
      if (graph.index_of(f.from) == i) rps[graph.index_of(f.to)] += f.factor * rps[i];
    }
  }
  if (rng && demand.noise_sigma > 0.0) {
    const double s = demand.noise_sigma;
    for (double& v : rps) v *= std::exp(s * rng->normal() - 0.5 * s * s);
  }
  return rps;
}

/// rates[node][minute] for an external trace, noise drawn from demand.seed.
inline std::vector<std::vector<double>> simulate_workloads(const ServiceGraph& graph,
                                                           std::span<const double> external,
                                                           const DemandModel& demand) {
  Rng rng(demand.seed);
  std::vector<std::vector<double>> out(graph.size(), std::vector<double>(external.size()));
  for (std::size_t t = 0; t < external.size(); ++t) {
    const auto r = propagate_workload(graph, external[t], demand, &rng);
    for (std::size_t i = 0; i < r.size(); ++i) out[i][t] = r[i];
  }
  return out;
}

/// vCPU consumed per minute: rate * cost per request.
inline std::vector<std::vector<double>> resource_usage(const ServiceGraph& graph,
                                                       const std::vector<std::vector<double>>& rates,
                                                       const DemandModel& demand) {
  std::vector<std::vector<double>> out = rates;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const double c = demand.cost_of(graph.nodes()[i]);
    for (double& v : out[i]) v *= c;
  }
  return out;
}

/// Per-pod utilization with load spread evenly: (rps * c) / (N * v).
inline double compute_utilization(double rps, double vcpu_per_request, int pods, double pod_vcpu) {
  if (pods < 1) throw std::invalid_argument("compute_utilization: pod count must be >= 1");
  if (!(pod_vcpu > 0.0)) throw std::invalid_argument("compute_utilization: pod_vcpu must be > 0");
  return rps * vcpu_per_request / (static_cast<double>(pods) * pod_vcpu);
}

struct HpaConfig {
  double scale_out = 0.9;
  double scale_in = 0.3;
  int stabilization_minutes = 5;

  void validate() const {
    if (!(scale_in > 0.0 && scale_in < scale_out && scale_out <= 1.0)) {
      throw std::invalid_argument("HpaConfig: need 0 < scale_in < scale_out <= 1");
    }
    if (stabilization_minutes < 0) throw std::invalid_argument("HpaConfig: negative stabilization window");
  }
};

struct ServiceState {
  int pods = 1;
  double rps = 0.0;
  double utilization = 0.0;
  bool overloaded = false;
  /// Consecutive minutes, ending now, with utilization below the scale-in threshold.
  int low_util_minutes = 0;
};

struct ClusterState {
  std::int64_t minute = 0;
  std::vector<ServiceState> services;

  int total_pods() const {
    int s = 0;
    for (const auto& v : services) s += v.pods;
    return s;
  }
};

inline constexpr int kBookinfoCapacity = 79;

/// One pod at a time: out if utilization exceeds the scale-out threshold and
/// both Q and the cluster capacity allow it; in if utilization has stayed
/// below the scale-in threshold for the whole stabilization window.
inline std::vector<int> reactive_hpa_step(const ClusterState& state, const HpaConfig& config,
                                          const std::vector<int>& max_pods = {},
                                          int capacity = kBookinfoCapacity) {
  config.validate();
  std::vector<int> next;
  next.reserve(state.services.size());
  int total = state.total_pods();
  for (std::size_t i = 0; i < state.services.size(); ++i) {
    const auto& s = state.services[i];
    const int q = i < max_pods.size() ? max_pods[i] : capacity;
    int n = s.pods;
    if (s.utilization > config.scale_out) {
      if (n < q && total + 1 <= capacity) {
        n += 1;
        total += 1;
      }
    } else if (s.low_util_minutes >= config.stabilization_minutes &&
               s.utilization < config.scale_in && n > 1) {
      n -= 1;
      total -= 1;
    }
    next.push_back(n);
  }
  return next;
}

enum class PolicyKind { kReactive, kGraphPhpa };

/// What the proactive policy passes to integrate_step as the current share R.
enum class VcpuTracking {
  /// R = allocated pods * v, clamped to the bounds.
  kAllocated,
  /// R = the share decided at the previous step.
  kCarried,
};

inline std::string to_string(VcpuTracking t) {
  return t == VcpuTracking::kAllocated ? "allocated" : "carried";
}

inline VcpuTracking vcpu_tracking_from_string(const std::string& s) {
  if (s == "allocated") return VcpuTracking::kAllocated;
  if (s == "carried") return VcpuTracking::kCarried;
  throw std::invalid_argument("unknown vCPU tracking mode '" + s + "' (allocated|carried)");
}

struct Policy {
  PolicyKind kind = PolicyKind::kReactive;
  HpaConfig hpa;
  const PolicyModels* models = nullptr;
  VcpuTracking tracking = VcpuTracking::kAllocated;

  static Policy reactive(const HpaConfig& c) { return {PolicyKind::kReactive, c, nullptr}; }
  static Policy graph_phpa(const PolicyModels& m, VcpuTracking t = VcpuTracking::kAllocated) {
    return {PolicyKind::kGraphPhpa, {}, &m, t};
  }

  std::string label() const {
    if (kind == PolicyKind::kGraphPhpa) return "graph-phpa";
    char buf[32];
    std::snprintf(buf, sizeof buf, "reactive-%.2f", hpa.scale_out);
    return buf;
  }
};

struct SimulationOptions {
  /// First simulated minute (index into the trace).
  std::size_t start = 0;
  std::size_t horizon = 0;
  int startup_delay = 1;
  int initial_pods = 1;
  int capacity = kBookinfoCapacity;
};

struct SimulationRow {
  std::int64_t minute = 0;
  std::size_t service = 0;
  double external_rps = 0.0;
  double service_rps = 0.0;
  int pods = 1;
  double utilization = 0.0;
  bool overloaded = false;
  int decision_delta = 0;
};

struct DecisionRow {
  std::int64_t minute = 0;
  std::size_t service = 0;
  ServiceDecision decision;
};

struct SimulationLog {
  std::string policy;
  std::vector<std::string> services;
  std::size_t start = 0;
  std::size_t horizon = 0;
  std::vector<SimulationRow> rows;       // minute-major, services in graph order
  std::vector<DecisionRow> decisions;    // proactive policy only
  std::size_t capacity_warnings = 0;

  long long pod_minutes() const {
    long long s = 0;
    for (const auto& r : rows) s += r.pods;
    return s;
  }
  long long overload_minutes() const {
    long long s = 0;
    for (const auto& r : rows) s += r.overloaded ? 1 : 0;
    return s;
  }
  double mean_utilization() const {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rows) s += r.utilization;
    return s / static_cast<double>(rows.size());
  }
  /// Largest sum of pods over services in any single minute.
  int peak_total_pods() const {
    int peak = 0;
    for (std::size_t i = 0; i < rows.size(); i += services.size()) {
      int s = 0;
      for (std::size_t j = 0; j < services.size(); ++j) s += rows[i + j].pods;
      peak = std::max(peak, s);
    }
    return peak;
  }
  std::vector<int> pods_of(std::size_t service) const {
    std::vector<int> out;
    for (const auto& r : rows)
      if (r.service == service) out.push_back(r.pods);
    return out;
  }
};

namespace sim_detail {

struct PodPool {
  int effective = 1;
  std::deque<std::pair<std::int64_t, int>> pending;  // (ready minute, count)

  int allocated() const {
    int s = effective;
    for (const auto& p : pending) s += p.second;
    return s;
  }
  void promote(std::int64_t minute) {
    while (!pending.empty() && pending.front().first <= minute) {
      effective += pending.front().second;
      pending.pop_front();
    }
  }
  /// Moves the allocation to `target`; new pods arrive after `delay` minutes,
  /// removals cancel pending pods first and then take effect next minute.
  void retarget(int target, std::int64_t minute, int delay) {
    int diff = target - allocated();
    if (diff > 0) {
      pending.emplace_back(minute + delay, diff);
      return;
    }
    while (diff < 0 && !pending.empty()) {
      const int take = std::min(-diff, pending.back().second);
      pending.back().second -= take;
      diff += take;
      if (pending.back().second == 0) pending.pop_back();
    }
    effective = std::max(1, effective + diff);
  }
};

}  // namespace sim_detail

/// Replays external[start, start + horizon) under a policy. Workload noise
/// comes from demand.seed and is drawn over the whole trace up front, so every
/// policy sees the same per-minute rates.
inline SimulationLog run_simulation(std::span<const double> external, const ServiceGraph& graph,
                                    const DemandModel& demand, const ScalingBounds& bounds,
                                    const Policy& policy, const SimulationOptions& options) {
  const std::size_t n = graph.size();
  demand.validate(graph);
  if (bounds.size() != n) throw BoundsError("run_simulation: one ScalingBounds entry per service required");
  for (std::size_t i = 0; i < n; ++i) bounds[i].validate(graph.nodes()[i]);
  if (options.horizon < 1) throw std::invalid_argument("run_simulation: horizon must be >= 1");
  if (options.start + options.horizon > external.size()) {
    throw std::invalid_argument("run_simulation: trace has " + std::to_string(external.size()) +
                                " minutes, need start + horizon = " +
                                std::to_string(options.start + options.horizon));
  }
  if (options.startup_delay < 1) throw std::invalid_argument("run_simulation: startup_delay must be >= 1");
  if (options.initial_pods < 1 || options.initial_pods * static_cast<int>(n) > options.capacity) {
    throw std::invalid_argument("run_simulation: initial pods do not fit in the cluster");
  }
  if (policy.kind == PolicyKind::kGraphPhpa && policy.models == nullptr) {
    throw std::invalid_argument("run_simulation: graph-phpa policy needs trained models");
  }
  if (policy.kind == PolicyKind::kReactive) policy.hpa.validate();

  const auto rates = simulate_workloads(graph, external, demand);
  std::vector<double> cost(n);
  std::vector<int> max_pods(n);
  for (std::size_t i = 0; i < n; ++i) {
    cost[i] = demand.cost_of(graph.nodes()[i]);
    max_pods[i] = bounds[i].max_pods;
  }

  SimulationLog log;
  log.policy = policy.label();
  log.services = graph.nodes();
  log.start = options.start;
  log.horizon = options.horizon;
  log.rows.reserve(options.horizon * n);

  std::vector<sim_detail::PodPool> pools(n);
  std::vector<int> low_streak(n, 0);
  PolicyState phpa;
  for (std::size_t i = 0; i < n; ++i) {
    pools[i].effective = std::min(options.initial_pods, max_pods[i]);
    phpa.pods.push_back(pools[i].effective);
    phpa.vcpu.push_back(std::clamp(pools[i].effective * bounds[i].pod_vcpu, bounds[i].vcpu_lower,
                                   bounds[i].vcpu_upper));
  }
  const std::size_t k = policy.models ? policy.models->window() : 0;
  std::vector<std::vector<double>> history(n);

  for (std::size_t step = 0; step < options.horizon; ++step) {
    const std::size_t t = options.start + step;
    const auto minute = static_cast<std::int64_t>(t);
    ClusterState state{minute, std::vector<ServiceState>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      pools[i].promote(minute);
      auto& s = state.services[i];
      s.rps = rates[i][t];
      s.utilization = compute_utilization(s.rps, cost[i], pools[i].effective, bounds[i].pod_vcpu);
      s.overloaded = s.utilization > 1.0;
      low_streak[i] = (policy.kind == PolicyKind::kReactive && s.utilization < policy.hpa.scale_in)
                          ? low_streak[i] + 1
                          : 0;
      s.low_util_minutes = low_streak[i];
      s.pods = pools[i].allocated();
    }

    std::vector<int> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = pools[i].allocated();
    if (policy.kind == PolicyKind::kReactive) {
      target = reactive_hpa_step(state, policy.hpa, max_pods, options.capacity);
    } else if (t + 1 >= k) {
      for (std::size_t i = 0; i < n; ++i) {
        history[i].assign(rates[i].begin() + static_cast<std::ptrdiff_t>(t + 1 - k),
                          rates[i].begin() + static_cast<std::ptrdiff_t>(t + 1));
        phpa.pods[i] = pools[i].allocated();
        if (policy.tracking == VcpuTracking::kAllocated) {
          phpa.vcpu[i] = std::clamp(phpa.pods[i] * bounds[i].pod_vcpu, bounds[i].vcpu_lower,
                                    bounds[i].vcpu_upper);
        }
      }
      const auto res = run_policy_step(*policy.models, graph, history, phpa, bounds);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& d = res.decision.services[i];
        target[i] = d.pods_new;
        phpa.vcpu[i] = d.vcpu_new;
        log.decisions.push_back({minute, i, d});
      }
    }

    // Growth that would overflow the cluster is trimmed in service order.
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) total += std::min(target[i], pools[i].allocated());
    for (std::size_t i = 0; i < n; ++i) {
      const int current = pools[i].allocated();
      if (target[i] <= current) continue;
      const int want = target[i] - current;
      const int grant = std::clamp(options.capacity - total, 0, want);
      if (grant < want) log.capacity_warnings += 1;
      target[i] = current + grant;
      total += grant;
    }

    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = state.services[i];
      const int before = pools[i].allocated();
      const int effective_now = pools[i].effective;
      pools[i].retarget(target[i], minute, options.startup_delay);
      const int delta = pools[i].allocated() - before;
      if (delta < 0) low_streak[i] = 0;
      if (policy.kind == PolicyKind::kGraphPhpa) phpa.pods[i] = pools[i].allocated();
      log.rows.push_back({minute, i, external[t], s.rps, effective_now, s.utilization,
                          s.overloaded, delta});
    }
  }
  return log;
}

inline std::string format_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline constexpr const char* kSimulationLogHeader =
    "minute,service,external_rps,service_rps,pods,utilization,overloaded,policy,decision_delta";

inline std::string format_simulation_csv(const SimulationLog& log) {
  std::string out = kSimulationLogHeader;
  out += '\n';
  for (const auto& r : log.rows) {
    out += std::to_string(r.minute) + ',' + log.services[r.service] + ',' +
           format_double(r.external_rps) + ',' + format_double(r.service_rps) + ',' +
           std::to_string(r.pods) + ',' + format_double(r.utilization) + ',' +
           (r.overloaded ? "1" : "0") + ',' + log.policy + ',' + std::to_string(r.decision_delta) +
           '\n';
  }
  return out;
}

inline std::string format_decision_csv(const SimulationLog& log) {
  std::string out = kDecisionLogHeader;
  out += '\n';
  for (const auto& d : log.decisions) {
    out += std::to_string(d.minute) + ',' + log.services[d.service] + ',' +
           format_double(d.decision.vcpu_prev) + ',' + format_double(d.decision.vcpu_new) + ',' +
           std::to_string(d.decision.pods_prev) + ',' + std::to_string(d.decision.pods_new) + ',' +
           std::to_string(d.decision.delta) + '\n';
  }
  return out;
}

}  // namespace gphpa
