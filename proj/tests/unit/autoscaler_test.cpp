#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gphpa/autoscaler.hpp"
#include "gphpa/graph.hpp"
#include "fixtures.hpp"

using namespace gphpa;

namespace {

ServiceDecision single(double r, int n, double b, const ServiceBounds& bounds) {
  const double rs[] = {r};
  const int ns[] = {n};
  const double bs[] = {b};
  return integrate_step(rs, ns, bs, {bounds}).services.at(0);
}

ServiceBounds random_bounds(Rng& rng) {
  ServiceBounds b;
  b.max_pods = 1 + static_cast<int>(rng.below(30));
  b.vcpu_lower = rng.uniform(0.01, 2.0);
  b.vcpu_upper = b.vcpu_lower + rng.uniform(0.0, 20.0);
  b.pod_vcpu = rng.uniform(0.05, 4.0);
  return b;
}

}  // namespace

TEST(PodCeil, SnapsNearIntegers) {
  EXPECT_EQ(pod_ceil(1.0), 1);
  EXPECT_EQ(pod_ceil(1.0 + 1e-12), 1);
  EXPECT_EQ(pod_ceil(1.2), 2);
  EXPECT_EQ(pod_ceil((0.3 - 0.1) / 0.1), 2);
  EXPECT_EQ(pod_ceil(0.0), 0);
}

TEST(IntegrateStep, ExtraHalfVcpuAddsOnePod) {
  const ServiceBounds b{20, 0.1, 20.0, 0.5};
  const auto d = single(2.0, 4, 2.5, b);
  EXPECT_EQ(d.pods_new, 5);
  EXPECT_EQ(d.delta, 1);
  EXPECT_EQ(d.vcpu_new, 2.5);
  EXPECT_EQ(d.vcpu_prev, 2.0);
}

TEST(IntegrateStep, EqualPredictionKeepsPods) {
  const auto d = single(1.7, 3, 1.7, ServiceBounds{10, 0.1, 5.0, 1.0});
  EXPECT_EQ(d.pods_new, 3);
  EXPECT_EQ(d.delta, 0);
}

TEST(IntegrateStep, ScaleOutCappedAtMaxPods) {
  const auto d = single(1.0, 1, 3.2, ServiceBounds{3, 0.1, 10.0, 1.0});
  EXPECT_EQ(d.pods_new, 3);
  EXPECT_EQ(d.delta, 2);
  EXPECT_DOUBLE_EQ(d.vcpu_new, 3.2);
}

TEST(IntegrateStep, ScaleInFlooredAtOnePod) {
  const auto d = single(5.0, 2, 0.0, ServiceBounds{10, 0.1, 10.0, 1.0});
  EXPECT_EQ(d.vcpu_new, 0.1);
  EXPECT_EQ(d.pods_new, 1);
  EXPECT_EQ(d.delta, -1);
}

TEST(IntegrateStep, PredictionClampedToUpperBound) {
  const auto d = single(1.0, 1, 100.0, ServiceBounds{50, 0.1, 4.0, 1.0});
  EXPECT_EQ(d.vcpu_new, 4.0);
  EXPECT_EQ(d.pods_new, 4);
}

TEST(IntegrateStep, ScaleInRemovesCeilOfDifference) {
  const auto d = single(4.0, 6, 2.5, ServiceBounds{10, 0.1, 10.0, 1.0});
  EXPECT_EQ(d.pods_new, 4);
  EXPECT_EQ(d.delta, -2);
}

TEST(IntegrateStep, RejectsViolatedPreconditions) {
  const ServiceBounds b{4, 0.5, 4.0, 1.0};
  EXPECT_THROW(single(0.2, 1, 1.0, b), BoundsError);
  EXPECT_THROW(single(1.0, 0, 1.0, b), BoundsError);
  EXPECT_THROW(single(1.0, 5, 1.0, b), BoundsError);
  EXPECT_THROW(single(1.0, 1, std::nan(""), b), BoundsError);
  EXPECT_THROW(single(1.0, 1, 1.0, ServiceBounds{0, 0.5, 4.0, 1.0}), BoundsError);
  EXPECT_THROW(single(1.0, 1, 1.0, ServiceBounds{4, 0.5, 4.0, 0.0}), BoundsError);
  const double r[] = {1.0, 1.0};
  const int n[] = {1};
  const double p[] = {1.0, 1.0};
  EXPECT_THROW(integrate_step(r, n, p, {b, b}), BoundsError);
}

TEST(IntegrateStepProperty, OutputsStayWithinBounds) {
  Rng rng(41);
  for (int trial = 0; trial < 20000; ++trial) {
    const ServiceBounds b = random_bounds(rng);
    const double r = rng.uniform(b.vcpu_lower, b.vcpu_upper);
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(b.max_pods)));
    const double pred = rng.uniform(-5.0, 1.5 * b.vcpu_upper + 5.0);
    const auto d = single(r, n, pred, b);
    ASSERT_GE(d.pods_new, 1);
    ASSERT_LE(d.pods_new, b.max_pods);
    ASSERT_GE(d.vcpu_new, b.vcpu_lower);
    ASSERT_LE(d.vcpu_new, b.vcpu_upper);
    ASSERT_EQ(d.delta, d.pods_new - n);
  }
}

TEST(IntegrateStepProperty, MonotoneInPrediction) {
  Rng rng(42);
  for (int trial = 0; trial < 2000; ++trial) {
    const ServiceBounds b = random_bounds(rng);
    const double r = rng.uniform(b.vcpu_lower, b.vcpu_upper);
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(b.max_pods)));
    double lo = rng.uniform(-1.0, b.vcpu_upper + 2.0);
    double hi = rng.uniform(-1.0, b.vcpu_upper + 2.0);
    if (lo > hi) std::swap(lo, hi);
    ASSERT_LE(single(r, n, lo, b).pods_new, single(r, n, hi, b).pods_new)
        << "r=" << r << " n=" << n << " lo=" << lo << " hi=" << hi;
  }
}

TEST(IntegrateStepProperty, ExactMultiplesAddExactQuotient) {
  for (double v : {0.1, 0.2, 0.25, 0.5, 1.0, 1.5}) {
    for (int a = 1; a <= 10; ++a) {
      for (int m = 1; m <= 10; ++m) {
        const ServiceBounds b{100, 0.01, 100.0, v};
        const double r = a * v;
        const double target = (a + m) * v;
        EXPECT_EQ(single(r, 50, target, b).delta, m) << "v=" << v << " a=" << a << " m=" << m;
        EXPECT_EQ(single(target, 50, r, b).delta, -m) << "v=" << v << " a=" << a << " m=" << m;
      }
    }
  }
}

TEST(RunPolicyStep, ZeroHistoryDrivesShareToLowerBound) {
  const ServiceGraph g = bookinfo_graph();
  const PolicyModels m = testkit::constant_models(g, 4, -5.0);
  const ScalingBounds bounds(4, ServiceBounds{10, 0.2, 10.0, 1.0});
  const std::vector<std::vector<double>> history(4, std::vector<double>(4, 0.0));
  PolicyState state{{3.0, 3.0, 3.0, 3.0}, {3, 3, 3, 3}};
  const auto r = run_policy_step(m, g, history, state, bounds);
  for (const auto& d : r.decision.services) {
    EXPECT_EQ(d.vcpu_new, 0.2);
    EXPECT_EQ(d.pods_new, 1);
  }
  for (double p : r.predicted_peak) EXPECT_EQ(p, 0.0);
}

TEST(RunPolicyStep, PureGivenInputs) {
  const ServiceGraph g = bookinfo_graph();
  const PolicyModels m = testkit::constant_models(g, 5, 0.6);
  const ScalingBounds bounds(4, ServiceBounds{10, 0.1, 10.0, 0.5});
  Rng rng(3);
  std::vector<std::vector<double>> history(4, std::vector<double>(7));
  for (auto& h : history)
    for (double& v : h) v = rng.uniform(0.0, 90.0);
  const PolicyState state{{1.0, 0.5, 2.0, 1.5}, {2, 1, 4, 3}};
  const auto a = run_policy_step(m, g, history, state, bounds);
  const auto b = run_policy_step(m, g, history, state, bounds);
  EXPECT_EQ(a.decision, b.decision);
  EXPECT_EQ(a.forecast, b.forecast);
  for (double p : a.predicted_peak) EXPECT_NEAR(p, 2.4, 1e-12);
  for (const auto& d : a.decision.services) EXPECT_NEAR(d.vcpu_new, 2.4, 1e-12);
}

TEST(RunPolicyStep, ShortHistoryOrMismatchedWindowThrows) {
  const ServiceGraph g = bookinfo_graph();
  PolicyModels m = testkit::constant_models(g, 5, 0.5);
  const ScalingBounds bounds(4, ServiceBounds{10, 0.1, 10.0, 1.0});
  const PolicyState state{{1, 1, 1, 1}, {1, 1, 1, 1}};
  EXPECT_THROW(run_policy_step(m, g, std::vector<std::vector<double>>(4, std::vector<double>(4, 1.0)),
                               state, bounds),
               std::invalid_argument);
  m.workload[2].config.window = 6;
  EXPECT_THROW(run_policy_step(m, g, std::vector<std::vector<double>>(4, std::vector<double>(6, 1.0)),
                               state, bounds),
               ShapeError);
}
