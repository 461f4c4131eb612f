#include "raopt/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "barrier.hpp"
#include "raopt/perf_model.hpp"

namespace raopt {

namespace {

/// Variables (p_0..p_{m-1}, s); maximize s subject to s <= log x_l and
/// P_i <= 1 for every transmitting node.
class MaxMinProgram final : public detail::ConvexProgram {
 public:
  explicit MaxMinProgram(const NetworkTopology& topology)
      : topology_(topology), model_(topology) {
    for (std::size_t i = 0; i < topology.num_nodes(); ++i) {
      if (!topology.out_links(i).empty()) transmitters_.push_back(i);
    }
  }

  std::size_t num_vars() const override { return topology_.num_links() + 1; }
  std::size_t num_constraints() const override {
    return topology_.num_links() + transmitters_.size();
  }

  double objective(const Eigen::VectorXd& v) const override { return -v[m()]; }
  void objective_gradient(const Eigen::VectorXd&, Eigen::VectorXd& grad) const override {
    grad.setZero();
    grad[m()] = -1.0;
  }

  bool constraints(const Eigen::VectorXd& v, Eigen::VectorXd& c) const override {
    const auto p = probabilities(v);
    for (double value : p) {
      if (!(value > 0.0)) return false;
    }
    const auto node_p = node_probabilities(topology_, p);
    for (double value : node_p) {
      if (!(value < 1.0)) {
        // P_i == 1 is allowed only for nodes no link needs silent.
        if (value > 1.0) return false;
      }
    }
    for (std::size_t l = 0; l < m(); ++l) {
      for (std::size_t k : topology_.silence_set(l)) {
        if (!(node_p[k] < 1.0)) return false;
      }
      c[l] = v[m()] - model_.log_throughput(l, p, node_p);
    }
    for (std::size_t t = 0; t < transmitters_.size(); ++t) {
      c[m() + t] = node_p[transmitters_[t]] - 1.0;
    }
    return true;
  }

  void constraint_jacobian(const Eigen::VectorXd& v, Eigen::MatrixXd& jac) const override {
    const auto p = probabilities(v);
    const auto node_p = node_probabilities(topology_, p);
    jac.setZero();
    std::vector<double> row(m());
    for (std::size_t l = 0; l < m(); ++l) {
      std::fill(row.begin(), row.end(), 0.0);
      model_.add_log_throughput_gradient(l, p, node_p, -1.0, row);
      for (std::size_t q = 0; q < m(); ++q) jac(l, q) = row[q];
      jac(l, m()) = 1.0;
    }
    for (std::size_t t = 0; t < transmitters_.size(); ++t) {
      for (std::size_t q : topology_.out_links(transmitters_[t])) jac(m() + t, q) = 1.0;
    }
  }

  void add_constraint_hessian(const Eigen::VectorXd& v, const Eigen::VectorXd& weights,
                              Eigen::MatrixXd& hess) const override {
    const auto p = probabilities(v);
    const auto node_p = node_probabilities(topology_, p);
    for (std::size_t l = 0; l < m(); ++l) {
      const double w = weights[l];
      if (w == 0.0) continue;
      model_.visit_neg_log_throughput_hessian(
          l, p, node_p, [&](std::size_t a, std::size_t b, double value) { hess(a, b) += w * value; });
    }
  }

  Eigen::VectorXd initial_point() const {
    Eigen::VectorXd v(num_vars());
    for (std::size_t l = 0; l < m(); ++l) {
      v[l] = 0.5 / static_cast<double>(topology_.out_links(topology_.transmitter(l)).size());
    }
    const auto p = probabilities(v);
    const auto node_p = node_probabilities(topology_, p);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < m(); ++l) {
      lowest = std::min(lowest, model_.log_throughput(l, p, node_p));
    }
    v[m()] = lowest - 1.0;
    return v;
  }

  std::vector<double> probabilities(const Eigen::VectorXd& v) const {
    return {v.data(), v.data() + m()};
  }

 private:
  std::size_t m() const { return topology_.num_links(); }

  const NetworkTopology& topology_;
  ThroughputModel model_;
  std::vector<std::size_t> transmitters_;
};

FeasibilityReport report_for(const NetworkTopology& topology, std::vector<double> p) {
  FeasibilityReport report;
  const auto x = link_throughput(topology, p);
  report.p = std::move(p);
  report.throughput = *std::min_element(x.begin(), x.end());
  report.log_throughput = std::log(report.throughput);
  report.min_dc = 1.0 / report.throughput;
  return report;
}

}  // namespace

FeasibilityReport maxmin_throughput(const NetworkTopology& topology,
                                    const FeasibilityOptions& options) {
  if (topology.num_links() == 0) {
    throw Error(ErrorCategory::kValidation, "max-min throughput needs at least one link");
  }
  MaxMinProgram program(topology);
  detail::BarrierOptions barrier;
  barrier.gap_tolerance = options.tolerance;
  const auto result = detail::solve_barrier(program, program.initial_point(), barrier);
  if (!result.converged) {
    throw Error(ErrorCategory::kNonConvergence,
                "max-min throughput solver did not converge within its iteration budget");
  }
  auto report = report_for(topology, program.probabilities(result.v));
  report.iterations = result.iterations;
  report.gap = result.gap;
  return report;
}

double min_delay_constraint(const NetworkTopology& topology, const FeasibilityOptions& options) {
  return maxmin_throughput(topology, options).min_dc;
}

FeasibilityReport brute_force_maxmin(const NetworkTopology& topology, double grid_resolution) {
  const std::size_t m = topology.num_links();
  if (m == 0) throw Error(ErrorCategory::kValidation, "brute force needs at least one link");
  if (m > static_cast<std::size_t>(kBruteForceMaxVariables)) {
    throw Error(ErrorCategory::kValidation,
                "brute force supports at most " + std::to_string(kBruteForceMaxVariables) +
                    " link probabilities");
  }
  if (!(grid_resolution > 0.0 && grid_resolution <= 0.5)) {
    throw Error(ErrorCategory::kValidation, "grid resolution must lie in (0, 0.5]");
  }
  const long steps = std::lround(1.0 / grid_resolution);
  const double h = 1.0 / static_cast<double>(steps);

  std::vector<long> units(m, 0);
  std::vector<long> best_units(m, 0);
  double best = -1.0;
  std::vector<double> p(m);
  std::vector<double> node_p(topology.num_nodes());
  long evaluations = 0;

  auto evaluate = [&] {
    ++evaluations;
    std::fill(node_p.begin(), node_p.end(), 0.0);
    for (std::size_t l = 0; l < m; ++l) {
      p[l] = static_cast<double>(units[l]) * h;
      node_p[topology.transmitter(l)] += p[l];
    }
    for (double value : node_p) {
      if (value > 1.0 + 1e-12) return;
    }
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < m && worst > best; ++l) {
      double x = topology.link(l).capacity * p[l];
      for (std::size_t k : topology.silence_set(l)) x *= std::max(0.0, 1.0 - node_p[k]);
      worst = std::min(worst, x);
    }
    if (worst > best) {
      best = worst;
      best_units = units;
    }
  };

  // Visit the lattice points lo[l] + k * stride <= hi[l] in every dimension.
  auto scan = [&](const std::vector<long>& lo, const std::vector<long>& hi, long stride) {
    std::function<void(std::size_t)> recurse = [&](std::size_t dim) {
      if (dim == m) {
        evaluate();
        return;
      }
      for (long u = lo[dim]; u <= hi[dim]; u += stride) {
        units[dim] = u;
        recurse(dim + 1);
      }
    };
    recurse(0);
  };

  constexpr double kExhaustiveLimit = 2e6;
  long stride = 1;
  while (std::pow(static_cast<double>(steps / stride + 1), static_cast<double>(m)) >
         kExhaustiveLimit) {
    stride *= 2;
  }
  scan(std::vector<long>(m, 0), std::vector<long>(m, steps - steps % stride), stride);

  // Refine around the incumbent, then hill-climb on the finest lattice.
  while (true) {
    const long next = std::max(1L, stride / 2);
    const auto centre = best_units;
    std::vector<long> lo(m), hi(m);
    const long radius = next == stride ? 2 : stride;
    for (std::size_t l = 0; l < m; ++l) {
      lo[l] = std::max(0L, centre[l] - radius);
      hi[l] = std::min(steps, centre[l] + radius);
    }
    const double before = best;
    scan(lo, hi, next);
    if (next == stride && !(best > before)) break;
    stride = next;
  }

  std::vector<double> best_p(m);
  for (std::size_t l = 0; l < m; ++l) best_p[l] = static_cast<double>(best_units[l]) * h;
  auto report = report_for(topology, best_p);
  report.iterations = static_cast<int>(std::min<long>(evaluations, std::numeric_limits<int>::max()));
  report.gap = h;
  return report;
}

}  // namespace raopt
