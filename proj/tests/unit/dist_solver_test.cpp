#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "raopt/dist_solver.hpp"

namespace raopt {
namespace {

NetworkTopology single_link() { return NetworkTopology::build({{1}, {2}}, {{1, 2}}, {{1, 2}}); }

/// |P - M / (a + S / (1 - P))|: the summed per-link stationarity condition.
double fixed_point_gap(double P, double M, double S, double a) {
  return std::abs(P - M / (a + S / (1.0 - P)));
}

TEST(RateUpdate, Examples) {
  EXPECT_NEAR(rate_update(0.2, 0.1, 100.0, 1.0), 0.1 / (0.1 * 99.5), 1e-15);
  EXPECT_NEAR(rate_update(0.2, 0.1, 100.0, 1.0), 0.010050251256281407, 1e-15);
  EXPECT_EQ(rate_update(0.2, 0.0, 100.0, 1.0), 1e-9);
  EXPECT_EQ(rate_update(0.1, 0.1, 100.0, 1.0), 1.0);
  EXPECT_EQ(rate_update(0.05, 0.1, 100.0, 0.5), 0.5);
  EXPECT_EQ(rate_update(0.1000001, 0.1, 100.0, 0.5), 0.5);  // formula above capacity
}

TEST(RateUpdate, MinimizesLagrangianTerm) {
  // -lambda2 z + mu log(1/D + e^z (1 - 1/(2D))) has its minimum at the update.
  const double mu = 0.3, lambda2 = 0.1, dc = 50.0;
  const double r = rate_update(mu, lambda2, dc, 1.0);
  auto f = [&](double z) { return -lambda2 * z + mu * std::log(1.0 / dc + std::exp(z) * (1 - 0.5 / dc)); };
  const double z = std::log(r);
  EXPECT_LT(f(z), f(z - 0.05));
  EXPECT_LT(f(z), f(z + 0.05));
  EXPECT_NEAR((f(z + 1e-5) - f(z - 1e-5)) / 2e-5, 0.0, 1e-8);
}

TEST(NodeProbUpdate, Examples) {
  EXPECT_EQ(node_prob_update(0.0, 0.0, 1.0), 0.0);
  EXPECT_EQ(node_prob_update(0.0, 0.3, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(node_prob_update(0.1, 0.1, 0.0), 0.5);
  EXPECT_NEAR(node_prob_update(0.1, 0.1, 1.0), (1.2 - std::sqrt(1.44 - 0.4)) / 2.0, 1e-15);
  EXPECT_NEAR(node_prob_update(0.1, 0.1, 1.0), 0.0901, 1e-4);
}

TEST(NodeProbUpdateProperty, RootInUnitIntervalAndFixedPoint) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 20000; ++k) {
    const double M = std::exp(-8.0 + 12.0 * unit(rng));
    const double S = std::exp(-8.0 + 12.0 * unit(rng));
    const double a = (k % 10 == 0) ? 0.0 : std::exp(-6.0 + 10.0 * unit(rng));
    const double P = node_prob_update(M, S, a, 1e-12);
    ASSERT_GE(P, 0.0);
    ASSERT_LT(P, 1.0);
    if (P < 1.0 - 1e-9) {
      EXPECT_LE(fixed_point_gap(P, M, S, a), 1e-9) << M << " " << S << " " << a;
    }
  }
}

TEST(NodeProbUpdateProperty, PrintedCoefficientFailsFixedPoint) {
  // Dropping the energy weight from the linear coefficient, a P^2 - (S + M) P + M = 0,
  // has no real root here and a root off the fixed point below.
  EXPECT_LT(0.2 * 0.2 - 4.0 * 1.0 * 0.1, 0.0);
  EXPECT_LE(fixed_point_gap(node_prob_update(0.1, 0.1, 1.0), 0.1, 0.1, 1.0), 1e-12);
  const double M = 0.1, S = 1.0, a = 0.1;
  const double b = S + M;
  const double printed = 2.0 * M / (b + std::sqrt(b * b - 4.0 * a * M));
  EXPECT_GT(fixed_point_gap(printed, M, S, a), 1e-3);
  EXPECT_LE(fixed_point_gap(node_prob_update(M, S, a), M, S, a), 1e-12);
}

TEST(LinkProbUpdate, Examples) {
  EXPECT_EQ(link_prob_update(0.0, 1.0, 0.2, 0.3), 1e-6);
  EXPECT_DOUBLE_EQ(link_prob_update(0.1, 0.0, 0.1, 0.5), 0.5);
  EXPECT_EQ(link_prob_update(0.1, 0.0, 0.0, 0.2), 1.0 - 1e-6);
  // One out-link: p equals the node probability.
  const double M = 0.3, S = 0.2, a = 5.0;
  const double P = node_prob_update(M, S, a);
  EXPECT_NEAR(link_prob_update(M, a, S, P), P, 1e-15);
}

TEST(LinkProbUpdateProperty, SplitSumsToNodeProbability) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  for (int k = 0; k < 2000; ++k) {
    std::vector<double> mu(1 + k % 4);
    double M = 0.0;
    for (double& m : mu) M += (m = unit(rng));
    const double S = unit(rng);
    const double a = 5.0 * unit(rng);
    const double P = node_prob_update(M, S, a, 1e-12);
    double total = 0.0;
    for (double m : mu) total += m / (a + S / (1.0 - P));
    EXPECT_NEAR(total, P, 1e-9);
  }
}

TEST(DualUpdate, Examples) {
  const double dc = 100.0;
  // r and x chosen so the residual is zero.
  const double r = 0.2;
  const double x = (1.0 - 0.5 / dc) * r + 1.0 / dc;
  EXPECT_NEAR(dual_update(0.7, r, x, dc, 0.5), 0.7, 1e-15);
  EXPECT_EQ(dual_update(0.0, 0.01, 0.5, dc, 0.01), 0.0);
  const double g = std::log(0.0199500) - std::log(0.5);
  EXPECT_NEAR(dual_update(0.2, 0.01, 0.5, dc, 0.01), 0.2 + 0.01 * g, 1e-15);
  EXPECT_NEAR(dual_update(0.2, 0.01, 0.5, dc, 0.01), 0.1677, 1e-4);
  EXPECT_GT(dual_update(0.2, 0.6, 0.5, dc, 0.01), 0.2);
  EXPECT_NEAR(dual_update(0.2, 0.01, 0.0, dc, 0.01), 0.2 + 0.01 * kZeroThroughputResidual, 1e-15);
}

TEST(Messages, CountsFromTopology) {
  EXPECT_EQ(messages_per_round(single_link()), 1);
  EXPECT_EQ(messages_per_round(gen_star(3)), 4);
  DistConfig c;
  c.max_iterations = 5;
  const auto result = run(gen_star(3), c);
  const auto counts = message_stats(result.trace);
  ASSERT_EQ(counts.size(), 6u);
  EXPECT_EQ(counts[0], 0);
  for (std::size_t k = 1; k < counts.size(); ++k) EXPECT_EQ(counts[k], 4);
}

DistReference central_reference(const NetworkTopology& t, double dc) {
  SolverConfig c;
  c.delay_bound = dc;
  return reference_from(solve(t, c));
}

TEST(DistRun, ConvergesOnLinearEight) {
  const auto t = gen_linear(8);
  const auto ref = central_reference(t, 100.0);
  DistConfig c;
  const auto result = run(t, c, ref);
  ASSERT_TRUE(result.converged_at.has_value());
  EXPECT_LE(*result.converged_at, 500);
  EXPECT_LT(result.trace.cost_error.back(), 0.01);
}

TEST(DistRun, AgreesWithCentralOnStars) {
  for (int n : {4, 8}) {
    const auto t = gen_star(n);
    const auto ref = central_reference(t, 100.0);
    DistConfig c;
    c.max_iterations = 3000;
    c.stop_at_threshold = false;
    const auto result = run(t, c, ref);
    EXPECT_LT(result.trace.cost_error.back(), 0.01) << n;
  }
}

TEST(DistRun, IterateInvariants) {
  const auto t = gen_linear(6);
  const auto ref = central_reference(t, 100.0);
  DistConfig c;
  c.max_iterations = 300;
  c.stop_at_threshold = false;
  const auto result = run(t, c, ref);
  ASSERT_EQ(result.trace.size(), 301u);
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    for (double m : result.trace.mu[k]) EXPECT_GE(m, 0.0);
    const auto& p = result.trace.p[k];
    for (double v : p) {
      EXPECT_GE(v, c.probability_floor);
      EXPECT_LE(v, 1.0 - c.probability_floor);
    }
    for (double total : node_probabilities(t, p)) EXPECT_LT(total, 1.0);
    EXPECT_EQ(result.trace.r[k].size(), t.num_links());
  }
}

TEST(DistRun, FixedPointPassesKkt) {
  const auto t = gen_linear(4);
  DistConfig c;
  c.max_iterations = 20000;
  c.stop_at_threshold = false;
  const auto result = run(t, c);
  SolverConfig sc;
  const auto k = kkt_residual(t, result.state, result.state_prices, sc);
  EXPECT_LE(k.max(), 1e-5);
}

TEST(DistRun, ZeroStepFreezesState) {
  const auto t = gen_linear(4);
  DistConfig c;
  c.step_size = 0.0;
  c.max_iterations = 10;
  const auto result = run(t, c);
  for (std::size_t k = 1; k < result.trace.size(); ++k) {
    EXPECT_EQ(result.trace.mu[k], result.trace.mu[0]);
    EXPECT_EQ(result.trace.p[k], result.trace.p[1]);
    EXPECT_EQ(result.trace.r[k], result.trace.r[1]);
  }
}

TEST(DistRun, FixedPointAsReference) {
  const auto t = gen_linear(4);
  DistConfig c;
  c.max_iterations = 20000;
  c.stop_at_threshold = false;
  const auto converged = run(t, c);
  DistReference ref{scalar_cost(c.lambda1, c.lambda2, energy(t, converged.state),
                                utility(converged.state)),
                    {converged.state.p().begin(), converged.state.p().end()},
                    {converged.state.r().begin(), converged.state.r().end()}};
  c.max_iterations = 500;
  c.stop_at_threshold = true;
  const auto result = run(t, c, ref);
  EXPECT_GE(result.trace.cost_error.front(), 0.0);
  EXPECT_LT(result.trace.cost_error.back(), c.convergence_threshold);
}

TEST(DistRun, Deterministic) {
  const auto t = gen_star(5);
  DistConfig c;
  c.max_iterations = 50;
  const auto a = run(t, c);
  const auto b = run(t, c);
  EXPECT_EQ(a.trace.cost, b.trace.cost);
  EXPECT_EQ(a.trace.p, b.trace.p);
  EXPECT_EQ(a.trace.mu, b.trace.mu);
}

TEST(DistRun, DivergenceDetected) {
  // Prices start where every rate sits at capacity, so the initial cost is
  // small and a large step throws the rates to their floor.
  const auto t = gen_linear(4);
  DistConfig c;
  c.lambda1 = 0.01;
  c.lambda2 = 1.0;
  c.initial_multiplier = 1.0101;
  c.step_size = 50.0;
  c.max_iterations = 200;
  try {
    run(t, c);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kNonConvergence);
  }
}

TEST(DistRun, ConfigValidation) {
  const auto t = gen_linear(3);
  auto expect_invalid = [&](DistConfig c) {
    try {
      run(t, c);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::kValidation);
    }
  };
  DistConfig c;
  c.step_size = -0.1;
  expect_invalid(c);
  c = {};
  c.initial_multiplier = 0.05;
  expect_invalid(c);
  c = {};
  c.delay_bound = 1.0;
  expect_invalid(c);
  c = {};
  c.lambda1 = -1;
  expect_invalid(c);
  c = {};
  c.initial_probability = 1.0;
  expect_invalid(c);
}

}  // namespace
}  // namespace raopt
