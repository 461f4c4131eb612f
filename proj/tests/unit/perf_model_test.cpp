#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "raopt/perf_model.hpp"

namespace raopt {
namespace {

NetworkTopology single_link() { return NetworkTopology::build({{1}, {2}}, {{1, 2}}, {{1, 2}}); }

TEST(ServiceMoments, HandValues) {
  const auto one = service_moments(1.0);
  EXPECT_DOUBLE_EQ(one.mean, 1.0);
  EXPECT_DOUBLE_EQ(one.variance, 0.0);
  EXPECT_DOUBLE_EQ(one.second_moment, 1.0);
  const auto half = service_moments(0.5);
  EXPECT_DOUBLE_EQ(half.mean, 2.0);
  EXPECT_DOUBLE_EQ(half.variance, 2.0);
  EXPECT_DOUBLE_EQ(half.second_moment, 6.0);
  const auto quarter = service_moments(0.25);
  EXPECT_DOUBLE_EQ(quarter.mean, 4.0);
  EXPECT_DOUBLE_EQ(quarter.variance, 12.0);
  EXPECT_DOUBLE_EQ(quarter.second_moment, 28.0);
  EXPECT_THROW(service_moments(0.0), Error);
  EXPECT_THROW(service_moments(1.5), Error);
}

TEST(ServiceMoments, MatchGeometricSeries) {
  for (double x : {0.05, 0.2, 0.5, 0.9}) {
    const auto [mean, second] = oracle::geometric_moments_by_series(x);
    const auto m = service_moments(x);
    EXPECT_NEAR(m.mean, mean, 1e-9 * mean);
    EXPECT_NEAR(m.second_moment, second, 1e-9 * second);
  }
}

TEST(PkDelay, HandValues) {
  EXPECT_DOUBLE_EQ(pk_delay(0.0, 2.0, 6.0), 2.0);
  EXPECT_DOUBLE_EQ(pk_delay(0.25, 2.0, 6.0), 3.5);
  EXPECT_THROW(pk_delay(0.5, 2.0, 6.0), Error);
}

TEST(LinkDelay, HandValues) {
  EXPECT_DOUBLE_EQ(link_delay(0.0, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(link_delay(0.25, 0.5), 3.5);
  EXPECT_DOUBLE_EQ(link_delay(0.1, 0.5), 2.375);
  EXPECT_THROW(link_delay(0.5, 0.5), Error);
  EXPECT_THROW(link_delay(0.6, 0.5), Error);
}

TEST(LinkDelayProperty, EqualsPkComposition) {
  for (int a = 1; a <= 100; ++a) {
    const double x = a / 100.0;
    for (int b = 0; b < 100; ++b) {
      const double r = 0.999 * x * b / 100.0;
      const auto m = service_moments(x);
      const double pk = pk_delay(r, m.mean, m.second_moment);
      EXPECT_LE(std::abs(link_delay(r, x) - pk), 1e-12 * pk) << "x=" << x << " r=" << r;
    }
  }
}

TEST(LinkDelayProperty, Monotone) {
  for (int a = 1; a <= 40; ++a) {
    const double x = a / 40.0;
    for (int b = 0; b < 39; ++b) {
      const double r = x * b / 40.0;
      const double h = 1e-3 * x;
      EXPECT_GT(link_delay(r + h, x), link_delay(r, x));
      if (x + h <= 1.0) {
        EXPECT_LT(link_delay(r, x + h), link_delay(r, x));
      }
    }
  }
}

TEST(LinkDelayProperty, LowLoadLimit) {
  for (double x : {0.1, 0.4, 1.0}) EXPECT_NEAR(link_delay(1e-12, x), 1.0 / x, 1e-9);
}

TEST(LinkThroughput, HandValues) {
  const auto t = single_link();
  EXPECT_DOUBLE_EQ(link_throughput(t, std::vector<double>{0.7})[0], 0.7);
  const auto star = gen_star(3);
  const auto x = link_throughput(star, std::vector<double>{0.5, 0.5});
  EXPECT_DOUBLE_EQ(x[0], 0.25);
  EXPECT_DOUBLE_EQ(x[1], 0.25);
  EXPECT_DOUBLE_EQ(link_throughput(star, std::vector<double>{0.0, 0.5})[0], 0.0);
}

TEST(LinkThroughputProperty, MatchesOracleAndBounds) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<NetworkTopology> nets = {gen_linear(5), gen_star(6), gen_geometric(7, 0.6, 5)};
  nets.push_back(NetworkTopology::build({{1}, {2}, {3}}, {{1, 2}, {2, 3}},
                                        {{1, 2, 0.5}, {3, 2, 2.0}}));
  for (const auto& t : nets) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> p(t.num_links());
      for (std::size_t i = 0; i < t.num_nodes(); ++i) {
        const auto out = t.out_links(i);
        const double budget = unit(rng);
        for (std::size_t l : out) p[l] = budget * unit(rng) / static_cast<double>(out.size());
      }
      const auto x = link_throughput(t, p);
      const auto expected = oracle::throughput(t, p);
      for (std::size_t l = 0; l < x.size(); ++l) {
        EXPECT_NEAR(x[l], expected[l], 1e-14);
        EXPECT_GE(x[l], 0.0);
        EXPECT_LE(x[l], t.link(l).capacity * p[l] + 1e-15);
      }
    }
  }
}

TEST(PrimalState, Validation) {
  const auto t = gen_linear(3);  // node 2 has two out-links
  EXPECT_THROW(PrimalState::from_rates(t, {0.6, 0.6, 0.5, 0.1}, {1, 1, 1, 1}), Error);
  EXPECT_THROW(PrimalState::from_rates(t, {-0.1, 0.1, 0.1, 0.1}, {1, 1, 1, 1}), Error);
  EXPECT_THROW(PrimalState::from_rates(t, {0.1, 0.1, 0.1, 0.1}, {1, 0, 1, 1}), Error);
  EXPECT_THROW(PrimalState::from_rates(t, {0.1, 0.1, 0.1}, {1, 1, 1}), Error);
  const auto s = PrimalState::from_rates(t, {0.2, 0.3, 0.4, 0.5}, {0.5, 1, 2, 0.25});
  for (std::size_t l = 0; l < 4; ++l) EXPECT_NEAR(std::exp(s.z(l)), s.r(l), 1e-15 * s.r(l));
  const auto idx = t.node_index(2);
  double total = 0.0;
  for (std::size_t l : t.out_links(idx)) total += s.p(l);
  EXPECT_EQ(s.node_p(idx), total);
}

TEST(DelayResidual, HandValues) {
  const double g = delay_residual(std::log(0.01), 0.5, 100.0);
  EXPECT_NEAR(g, std::log(0.01 + 0.00995) - std::log(0.5), 1e-12);
  EXPECT_LT(g, 0.0);
  EXPECT_GT(delay_residual(std::log(0.4999), 0.5, 100.0), 0.0);
  EXPECT_TRUE(std::isinf(delay_residual(std::log(0.1), 0.0, 100.0)));
}

TEST(DelayResidualProperty, SignMatchesDelayInequality) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  for (int k = 0; k < 20000; ++k) {
    const double x = 1e-3 + unit(rng) * (1.0 - 1e-3);
    const double r = 1e-6 + unit(rng) * 1.2 * x;
    const double dc = 1.0 + std::exp(unit(rng) * std::log(1000.0));
    const double direct = r + (1.0 - r / 2.0) / dc - x;
    if (std::abs(direct) < 1e-12) continue;
    const double g = delay_residual(std::log(r), x, dc);
    EXPECT_EQ(g < 0.0, direct < 0.0) << "r=" << r << " x=" << x << " dc=" << dc;
    ++checked;
  }
  EXPECT_GT(checked, 19000);
}

TEST(DelayResidualProperty, MidpointConvexInLogRateAndProbabilities) {
  // g(z, p) = log(1/D + e^z (1 - 1/(2D))) - log x_l(p) over the joint space.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<NetworkTopology> nets = {gen_linear(4), gen_star(5), gen_geometric(6, 0.7, 9)};
  int pairs = 0;
  for (const auto& t : nets) {
    auto draw = [&] {
      std::vector<double> p(t.num_links());
      for (std::size_t i = 0; i < t.num_nodes(); ++i) {
        const auto out = t.out_links(i);
        const double budget = 0.02 + 0.96 * unit(rng);
        for (std::size_t l : out) {
          p[l] = budget * (0.05 + 0.95 * unit(rng)) / static_cast<double>(out.size());
        }
      }
      return p;
    };
    for (int k = 0; k < 400; ++k) {
      const auto pu = draw();
      const auto pv = draw();
      std::vector<double> pm(pu.size());
      for (std::size_t l = 0; l < pu.size(); ++l) pm[l] = 0.5 * (pu[l] + pv[l]);
      const double zu = std::log(1e-6) + unit(rng) * 14.0;
      const double zv = std::log(1e-6) + unit(rng) * 14.0;
      const double dc = 1.5 + unit(rng) * 500.0;
      const auto xu = link_throughput(t, pu);
      const auto xv = link_throughput(t, pv);
      const auto xm = link_throughput(t, pm);
      for (std::size_t l = 0; l < t.num_links(); ++l) {
        const double fu = delay_residual(zu, xu[l], dc);
        const double fv = delay_residual(zv, xv[l], dc);
        const double fm = delay_residual(0.5 * (zu + zv), xm[l], dc);
        EXPECT_LE(fm, 0.5 * (fu + fv) + 1e-9);
        ++pairs;
      }
    }
  }
  EXPECT_GE(pairs, 1000);
}

TEST(Objectives, HandValues) {
  const auto t = gen_linear(2);
  const auto ones = PrimalState::from_rates(t, {0.5, 0.5}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(utility(ones), 0.0);
  EXPECT_DOUBLE_EQ(energy(t, ones), 1.0);
  EXPECT_DOUBLE_EQ(scalar_cost(5.0, 0.1, 1.0, -10.0), 6.0);

  const auto weighted = NetworkTopology::build({{1, 2.0}, {2, 3.0}}, {{1, 2}}, {{1, 2}, {2, 1}});
  EXPECT_DOUBLE_EQ(energy(weighted, std::vector<double>{0.25, 0.5}), 2.0);
  const auto s = PrimalState::from_rates(weighted, {0.25, 0.5}, {0.1, 0.2});
  EXPECT_NEAR(utility(s), std::log(0.1) + std::log(0.2), 1e-15);
}

TEST(LinkMetrics, DelayOnlyWhenStable) {
  const auto t = single_link();
  const auto stable = PrimalState::from_rates(t, {0.5}, {0.25});
  auto m = link_metrics(t, stable, 100.0);
  ASSERT_TRUE(m.delay[0].has_value());
  EXPECT_DOUBLE_EQ(*m.delay[0], 3.5);
  const auto unstable = PrimalState::from_rates(t, {0.5}, {0.75});
  m = link_metrics(t, unstable, 100.0);
  EXPECT_FALSE(m.delay[0].has_value());
  EXPECT_GT(m.residual[0], 0.0);
}

TEST(ThroughputModel, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.1, 0.9);
  for (const auto& t : {gen_linear(4), gen_star(5)}) {
    const ThroughputModel model(t);
    std::vector<double> p(t.num_links());
    for (std::size_t i = 0; i < t.num_nodes(); ++i) {
      const auto out = t.out_links(i);
      for (std::size_t l : out) p[l] = 0.8 * unit(rng) / static_cast<double>(out.size());
    }
    for (std::size_t l = 0; l < t.num_links(); ++l) {
      auto f = [&](const std::vector<double>& q) {
        const auto nodes = node_probabilities(t, q);
        return model.log_throughput(l, q, nodes);
      };
      const auto fd = oracle::gradient(f, p);
      std::vector<double> grad(t.num_links(), 0.0);
      model.add_log_throughput_gradient(l, p, node_probabilities(t, p), 1.0, grad);
      for (std::size_t q = 0; q < grad.size(); ++q) EXPECT_NEAR(grad[q], fd[q], 1e-6);
      EXPECT_NEAR(f(p), std::log(oracle::throughput(t, p)[l]), 1e-12);
    }
  }
}

TEST(ThroughputModel, HessianMatchesFiniteDifferencesOfGradient) {
  const auto t = gen_linear(4);
  const ThroughputModel model(t);
  std::vector<double> p = {0.2, 0.15, 0.3, 0.25, 0.1, 0.35};
  const std::size_t m = t.num_links();
  for (std::size_t l = 0; l < m; ++l) {
    std::vector<double> hess(m * m, 0.0);
    model.visit_neg_log_throughput_hessian(l, p, node_probabilities(t, p),
                                           [&](std::size_t a, std::size_t b, double v) {
                                             hess[a * m + b] += v;
                                           });
    const double h = 1e-6;
    for (std::size_t b = 0; b < m; ++b) {
      auto up = p, down = p;
      up[b] += h;
      down[b] -= h;
      std::vector<double> gu(m, 0.0), gd(m, 0.0);
      model.add_log_throughput_gradient(l, up, node_probabilities(t, up), -1.0, gu);
      model.add_log_throughput_gradient(l, down, node_probabilities(t, down), -1.0, gd);
      for (std::size_t a = 0; a < m; ++a) {
        EXPECT_NEAR(hess[a * m + b], (gu[a] - gd[a]) / (2 * h), 1e-4 * (1 + std::abs(hess[a * m + b])));
      }
    }
  }
}

TEST(ThroughputModel, RateTermDerivatives) {
  for (double dc : {2.0, 100.0}) {
    for (double z : {-8.0, -2.0, 0.0}) {
      const auto term = ThroughputModel::rate_term(z, dc);
      auto f = [&](double v) { return std::log(1.0 / dc + std::exp(v) * (1.0 - 0.5 / dc)); };
      const double h = 1e-5;
      EXPECT_NEAR(term.value, f(z), 1e-14);
      EXPECT_NEAR(term.first, (f(z + h) - f(z - h)) / (2 * h), 1e-8);
      EXPECT_NEAR(term.second, (f(z + h) - 2 * f(z) + f(z - h)) / (h * h), 1e-5);
    }
  }
}

}  // namespace
}  // namespace raopt
