#pragma once

// Hand-built models with predictable outputs for policy and simulator tests.

#include "gphpa/autoscaler.hpp"
#include "gphpa/graph.hpp"

namespace testkit {

/// Workload models that ignore their input and a resource model whose scaled
/// output is `scaled_output` on every node (target range [0, 4] vCPU).
inline gphpa::PolicyModels constant_models(const gphpa::ServiceGraph& g, std::size_t k, double scaled_output) {
  gphpa::PolicyModels m;
  gphpa::LstmConfig lc;
  lc.window = k;
  lc.hidden_units = 3;
  gphpa::GcnConfig gc;
  gc.input_features = k;
  gc.hidden_widths = {4};
  gphpa::Rng rng(5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    gphpa::LstmModel l = gphpa::LstmModel::initialize(lc, rng);
    l.head_weights.fill(0.0);
    l.scaler = {0.0, 100.0, -0.8, 0.8};
    m.workload.push_back(l);
  }
  m.resource = gphpa::GcnModel::initialize(gc, rng);
  m.resource.layers.back().weights.fill(0.0);
  m.resource.layers.back().bias.fill(scaled_output);
  m.resource.feature_scalers.assign(g.size(), gphpa::MinMaxScaler{0.0, 100.0, 0.0, 1.0});
  m.resource.target_scalers.assign(g.size(), gphpa::MinMaxScaler{0.0, 4.0, 0.0, 1.0});
  return m;
}

}  // namespace testkit
