#pragma once

// Proactive pod-count decisions. integrate_step turns a predicted vCPU need
// into a new share R and pod count N; run_policy_step chains the workload
// forecaster, the resource predictor and integrate_step for one minute.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gphpa/forecast_lstm.hpp"
#include "gphpa/graph.hpp"
#include "gphpa/predict_gcn.hpp"

namespace gphpa {

class BoundsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ServiceBounds {
  int max_pods = 1;          // Q_i
  double vcpu_lower = 0.1;   // R_lb_i
  double vcpu_upper = 1.0;   // R_ub_i
  double pod_vcpu = 1.0;     // v_i^p

  void validate(const std::string& who = "service") const {
    if (max_pods < 1) throw BoundsError(who + ": max_pods must be >= 1");
    if (!(vcpu_lower > 0.0) || !(vcpu_lower <= vcpu_upper)) {
      throw BoundsError(who + ": need 0 < vcpu_lower <= vcpu_upper");
    }
    if (!(pod_vcpu > 0.0)) throw BoundsError(who + ": pod_vcpu must be > 0");
  }
  friend bool operator==(const ServiceBounds&, const ServiceBounds&) = default;
};

using ScalingBounds = std::vector<ServiceBounds>;

struct ServiceDecision {
  double vcpu_prev = 0.0;
  double vcpu_new = 0.0;
  int pods_prev = 1;
  int pods_new = 1;
  int delta = 0;
  friend bool operator==(const ServiceDecision&, const ServiceDecision&) = default;
};

struct ScalingDecision {
  std::vector<ServiceDecision> services;
  friend bool operator==(const ScalingDecision&, const ScalingDecision&) = default;
};

/// ceil(x), except that x within a few ulps of an integer counts as that
/// integer. Keeps (2.5 - 2.0) / 0.5 and (0.3 - 0.1) / 0.1 at exactly 1 and 2.
inline long long pod_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<long long>(r);
  return static_cast<long long>(std::ceil(x));
}

/// One step of the integration rule for every service.
///
/// R' = clamp(b, R_lb, R_ub). If R' > R: N' = min(N + ceil((R' - R) / v), Q).
/// If R' < R: N' = max(N - ceil((R - R') / v), 1), then min with Q.
/// Otherwise N is kept.
inline ScalingDecision integrate_step(std::span<const double> current_vcpu,
                                      std::span<const int> current_pods,
                                      std::span<const double> predicted_peak,
                                      const ScalingBounds& bounds) {
  const std::size_t n = bounds.size();
  if (current_vcpu.size() != n || current_pods.size() != n || predicted_peak.size() != n) {
    throw BoundsError("integrate_step: inputs are not aligned with " + std::to_string(n) +
                      " services");
  }
  ScalingDecision out;
  out.services.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = bounds[i];
    const std::string who = "integrate_step: service " + std::to_string(i);
    b.validate(who);
    const double r = current_vcpu[i];
    const int pods = current_pods[i];
    if (!(r >= b.vcpu_lower && r <= b.vcpu_upper)) {
      std::ostringstream os;
      os << who << ": current vCPU " << r << " outside [" << b.vcpu_lower << ", " << b.vcpu_upper
         << "]";
      throw BoundsError(os.str());
    }
    if (pods < 1 || pods > b.max_pods) {
      throw BoundsError(who + ": current pods " + std::to_string(pods) + " outside [1, " +
                        std::to_string(b.max_pods) + "]");
    }
    if (!std::isfinite(predicted_peak[i])) throw BoundsError(who + ": non-finite prediction");

    const double r_new = std::clamp(predicted_peak[i], b.vcpu_lower, b.vcpu_upper);
    long long next = pods;
    if (r_new > r) {
      next = std::min<long long>(pods + pod_ceil((r_new - r) / b.pod_vcpu), b.max_pods);
    } else if (r_new < r) {
      next = std::max<long long>(pods - pod_ceil((r - r_new) / b.pod_vcpu), 1);
      next = std::min<long long>(next, b.max_pods);
    }
    const int next_pods = static_cast<int>(next);
    out.services.push_back({r, r_new, pods, next_pods, next_pods - pods});
  }
  return out;
}

/// Current allocation handed to integrate_step.
struct PolicyState {
  std::vector<double> vcpu;
  std::vector<int> pods;
};

struct PolicyModels {
  std::vector<LstmModel> workload;  // one per graph node, in node order
  GcnModel resource;

  std::size_t window() const noexcept { return resource.config.input_features; }
};

struct PolicyStepResult {
  std::vector<double> forecast;        // next-minute workload per service
  std::vector<double> predicted_peak;  // next-minute peak vCPU per service
  ScalingDecision decision;
};

/// history[i] holds at least k recent workloads of service i, oldest first.
inline PolicyStepResult run_policy_step(const PolicyModels& models, const ServiceGraph& graph,
                                        const std::vector<std::vector<double>>& history,
                                        const PolicyState& state, const ScalingBounds& bounds) {
  const std::size_t n = graph.size();
  const std::size_t k = models.window();
  if (models.workload.size() != n || history.size() != n) {
    throw ShapeError("run_policy_step: expected one workload model and history per service");
  }
  PolicyStepResult out;
  out.forecast.resize(n);
  Matrix features(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& h = history[i];
    const auto& m = models.workload[i];
    if (m.config.window != k) {
      throw ShapeError("run_policy_step: workload model window " +
                       std::to_string(m.config.window) + " differs from resource model k=" +
                       std::to_string(k));
    }
    if (h.size() < k) {
      throw std::invalid_argument("run_policy_step: service " + graph.nodes()[i] + " has " +
                                  std::to_string(h.size()) + " history points, need " +
                                  std::to_string(k));
    }
    const std::span<const double> last(h.data() + (h.size() - k), k);
    out.forecast[i] = lstm_forward(m, last);
    for (std::size_t c = 0; c + 1 < k; ++c) features(i, c) = last[c + 1];
    features(i, k - 1) = out.forecast[i];
  }
  out.predicted_peak = predict_resource(models.resource, graph, features);
  out.decision = integrate_step(state.vcpu, state.pods, out.predicted_peak, bounds);
  return out;
}

/// CSV header and row for the decision log.
inline constexpr const char* kDecisionLogHeader = "minute,service,R_prev,R_new,N_prev,N_new,delta";

}  // namespace gphpa
