#include "raopt/central_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <thread>

#include "barrier.hpp"
#include "raopt/feasibility.hpp"

namespace raopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Variables (p_0..p_{m-1}, z_0..z_{m-1}). Constraint blocks, in order:
/// delay (m), node totals (one per transmitter), p lower (m), z lower (m),
/// z upper (m).
///
/// With lambda2 == 0 the objective ignores z and the delay constraint is
/// increasing in z, so every rate sits at its floor; the z variables and
/// their bounds are then dropped and z is pinned at log(min_rate).
class CentralProgram final : public detail::ConvexProgram {
 public:
  CentralProgram(const NetworkTopology& topology, const SolverConfig& config)
      : topology_(topology),
        model_(topology),
        config_(config),
        z_min_(std::log(config.min_rate)),
        z_max_(std::log(topology.max_capacity())),
        free_rates_(config.lambda2 > 0.0) {
    for (std::size_t i = 0; i < topology.num_nodes(); ++i) {
      if (!topology.out_links(i).empty()) transmitters_.push_back(i);
    }
  }

  std::size_t num_vars() const override { return free_rates_ ? 2 * m() : m(); }
  std::size_t num_constraints() const override {
    return (free_rates_ ? 4 : 2) * m() + transmitters_.size();
  }

  double objective(const Eigen::VectorXd& v) const override {
    const auto p = probabilities(v);
    double u = 0.0;
    for (std::size_t l = 0; l < m(); ++l) u += log_rate(v, l);
    return config_.lambda1 * energy(topology_, p) - config_.lambda2 * u;
  }

  void objective_gradient(const Eigen::VectorXd&, Eigen::VectorXd& grad) const override {
    for (std::size_t l = 0; l < m(); ++l) {
      grad[l] = config_.lambda1 * topology_.node(topology_.transmitter(l)).energy;
      if (free_rates_) grad[m() + l] = -config_.lambda2;
    }
  }

  bool constraints(const Eigen::VectorXd& v, Eigen::VectorXd& c) const override {
    const auto p = probabilities(v);
    for (double value : p) {
      if (!(value > 0.0)) return false;
    }
    const auto node_p = node_probabilities(topology_, p);
    for (double value : node_p) {
      if (value > 1.0) return false;
    }
    const std::size_t t = transmitters_.size();
    for (std::size_t l = 0; l < m(); ++l) {
      for (std::size_t k : topology_.silence_set(l)) {
        if (!(node_p[k] < 1.0)) return false;
      }
      const double z = log_rate(v, l);
      c[l] = ThroughputModel::rate_term(z, config_.delay_bound).value -
             model_.log_throughput(l, p, node_p) + config_.feasibility_margin;
      c[m() + t + l] = config_.min_probability - p[l];
      if (free_rates_) {
        c[2 * m() + t + l] = z_min_ - z;
        c[3 * m() + t + l] = z - z_max_;
      }
    }
    for (std::size_t n = 0; n < t; ++n) c[m() + n] = node_p[transmitters_[n]] - 1.0;
    return true;
  }

  void constraint_jacobian(const Eigen::VectorXd& v, Eigen::MatrixXd& jac) const override {
    const auto p = probabilities(v);
    const auto node_p = node_probabilities(topology_, p);
    const std::size_t t = transmitters_.size();
    jac.setZero();
    std::vector<double> row(m());
    for (std::size_t l = 0; l < m(); ++l) {
      std::fill(row.begin(), row.end(), 0.0);
      model_.add_log_throughput_gradient(l, p, node_p, -1.0, row);
      for (std::size_t q = 0; q < m(); ++q) jac(l, q) = row[q];
      jac(m() + t + l, l) = -1.0;
      if (free_rates_) {
        jac(l, m() + l) = ThroughputModel::rate_term(v[m() + l], config_.delay_bound).first;
        jac(2 * m() + t + l, m() + l) = -1.0;
        jac(3 * m() + t + l, m() + l) = 1.0;
      }
    }
    for (std::size_t n = 0; n < t; ++n) {
      for (std::size_t q : topology_.out_links(transmitters_[n])) jac(m() + n, q) = 1.0;
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
      if (free_rates_) {
        hess(m() + l, m() + l) +=
            w * ThroughputModel::rate_term(v[m() + l], config_.delay_bound).second;
      }
    }
  }

  double log_rate(const Eigen::VectorXd& v, std::size_t l) const {
    return free_rates_ ? v[m() + l] : z_min_;
  }

  /// Packs (p, z) into the variable vector; z is ignored for pinned rates.
  Eigen::VectorXd pack(std::span<const double> p, std::span<const double> z) const {
    Eigen::VectorXd v(num_vars());
    for (std::size_t l = 0; l < m(); ++l) {
      v[l] = p[l];
      if (free_rates_) v[m() + l] = z[l];
    }
    return v;
  }

  std::vector<double> probabilities(const Eigen::VectorXd& v) const {
    return {v.data(), v.data() + m()};
  }

  /// Rates at half of the delay-constraint slack for the given p; empty when
  /// p leaves no slack.
  std::optional<Eigen::VectorXd> interior_point(const std::vector<double>& p) const {
    const auto node_p = node_probabilities(topology_, p);
    for (std::size_t i = 0; i < node_p.size(); ++i) {
      if (!(node_p[i] < 1.0)) return std::nullopt;
    }
    const double a = 1.0 / config_.delay_bound;
    const double b = 1.0 - 0.5 / config_.delay_bound;
    const auto x = link_throughput(topology_, p);
    std::vector<double> z(m(), z_min_);
    for (std::size_t l = 0; l < m(); ++l) {
      if (!(p[l] > config_.min_probability)) return std::nullopt;
      if (!free_rates_) continue;
      const double room = x[l] * std::exp(-config_.feasibility_margin) - a;
      const double r = 0.5 * room / b;
      if (!(r > config_.min_rate) || !(std::log(r) < z_max_)) return std::nullopt;
      z[l] = std::log(r);
    }
    Eigen::VectorXd v = pack(p, z);
    Eigen::VectorXd c(num_constraints());
    if (!constraints(v, c) || !(c.array() < 0.0).all()) return std::nullopt;
    return v;
  }

 private:
  std::size_t m() const { return topology_.num_links(); }

  const NetworkTopology& topology_;
  ThroughputModel model_;
  const SolverConfig& config_;
  double z_min_;
  double z_max_;
  bool free_rates_;
  std::vector<std::size_t> transmitters_;
};

}  // namespace

double KktResidual::max() const { return std::max({stationarity, feasibility, complementarity}); }

void validate(const SolverConfig& config) {
  auto fail = [](const std::string& message) { throw Error(ErrorCategory::kValidation, message); };
  if (!(config.lambda1 >= 0.0) || !(config.lambda2 >= 0.0)) fail("lambda weights must be >= 0");
  if (!(config.lambda1 + config.lambda2 > 0.0)) fail("lambda1 and lambda2 cannot both be 0");
  if (!(config.delay_bound > 1.0) || !std::isfinite(config.delay_bound)) {
    fail("delay bound must be a finite value > 1 slot");
  }
  if (!(config.feasibility_margin >= 0.0)) fail("feasibility margin must be >= 0");
  if (!(config.min_probability > 0.0) || !(config.min_rate > 0.0)) {
    fail("probability and rate floors must be positive");
  }
  if (config.max_iterations <= 0) fail("iteration limit must be positive");
}

KktResidual kkt_residual(const NetworkTopology& topology, const PrimalState& state,
                         const std::vector<double>& multipliers, const SolverConfig& config) {
  const std::size_t m = topology.num_links();
  if (multipliers.size() != m) {
    throw Error(ErrorCategory::kValidation, "one multiplier per link is required");
  }
  const ThroughputModel model(topology);
  const auto p = state.p();
  const auto node_p = state.node_p();
  const double z_min = std::log(config.min_rate);
  const double z_max = std::log(topology.max_capacity());

  std::vector<double> grad_p(m), grad_z(m);
  for (std::size_t l = 0; l < m; ++l) {
    grad_p[l] = config.lambda1 * topology.node(topology.transmitter(l)).energy;
    grad_z[l] = -config.lambda2;
  }

  KktResidual out;
  const auto residuals = delay_residuals(topology, state, config.delay_bound);
  for (std::size_t l = 0; l < m; ++l) {
    const double mu = multipliers[l];
    out.feasibility = std::max(out.feasibility, residuals[l]);
    out.complementarity = std::max(out.complementarity, std::max(0.0, -mu));
    if (mu == 0.0) continue;
    out.complementarity = std::max(out.complementarity, std::abs(mu * residuals[l]));
    grad_z[l] += mu * ThroughputModel::rate_term(state.z(l), config.delay_bound).first;
    model.add_log_throughput_gradient(l, p, node_p, -mu, grad_p);
  }

  // Node totals pinned at 1 carry their own multiplier.
  for (std::size_t i = 0; i < topology.num_nodes(); ++i) {
    const auto out_links = topology.out_links(i);
    out.feasibility = std::max(out.feasibility, node_p[i] - 1.0);
    if (out_links.empty() || node_p[i] < 1.0 - 1e-9) continue;
    double mean = 0.0;
    for (std::size_t q : out_links) mean += grad_p[q];
    mean /= static_cast<double>(out_links.size());
    const double nu = std::max(0.0, -mean);
    for (std::size_t q : out_links) grad_p[q] += nu;
  }

  for (std::size_t l = 0; l < m; ++l) {
    out.feasibility = std::max({out.feasibility, config.min_probability - p[l],
                                z_min - state.z(l), state.z(l) - z_max});
    if (p[l] <= config.min_probability * (1.0 + 1e-6)) {
      out.stationarity = std::max(out.stationarity, std::max(0.0, -grad_p[l]));
    } else {
      out.stationarity = std::max(out.stationarity, std::abs(grad_p[l]));
    }
    if (state.z(l) <= z_min + 1e-9) {
      out.stationarity = std::max(out.stationarity, std::max(0.0, -grad_z[l]));
    } else if (state.z(l) >= z_max - 1e-9) {
      out.stationarity = std::max(out.stationarity, std::max(0.0, grad_z[l]));
    } else {
      out.stationarity = std::max(out.stationarity, std::abs(grad_z[l]));
    }
  }
  out.feasibility = std::max(out.feasibility, 0.0);
  return out;
}

SolveReport solve(const NetworkTopology& topology, const SolverConfig& config) {
  validate(config);
  if (topology.num_links() == 0) throw Error(ErrorCategory::kValidation, "topology has no links");

  const FeasibilityReport feasibility = maxmin_throughput(topology);
  if (!(config.delay_bound > feasibility.min_dc)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "delay bound " << config.delay_bound << " is not above MinDc " << feasibility.min_dc;
    throw Error(ErrorCategory::kInfeasible, msg.str());
  }

  CentralProgram program(topology, config);
  std::optional<Eigen::VectorXd> start;
  if (config.initial) {
    const auto& init = *config.initial;
    const Eigen::VectorXd v = program.pack(init.p(), init.z());
    Eigen::VectorXd c(program.num_constraints());
    if (!program.constraints(v, c) || !(c.array() < 0.0).all()) {
      throw Error(ErrorCategory::kValidation, "initial point is not strictly feasible");
    }
    start = v;
  } else {
    std::vector<double> uniform(topology.num_links());
    for (std::size_t l = 0; l < uniform.size(); ++l) {
      uniform[l] = 0.5 / static_cast<double>(topology.out_links(topology.transmitter(l)).size());
    }
    start = program.interior_point(uniform);
    for (double shrink : {1e-3, 1e-5, 1e-7, 1e-9}) {
      if (start) break;
      std::vector<double> p = feasibility.p;
      for (double& value : p) value *= 1.0 - shrink;
      start = program.interior_point(p);
    }
  }
  if (!start) {
    throw Error(ErrorCategory::kInfeasible, "no strictly feasible starting point found");
  }

  detail::BarrierOptions options;
  options.gap_tolerance = config.barrier_gap;
  options.t_growth = config.barrier_growth;
  options.max_total_newton = config.max_iterations;
  const auto result = detail::solve_barrier(program, *start, options);
  if (!result.converged) {
    throw Error(ErrorCategory::kNonConvergence, "central solver hit its iteration limit");
  }

  const std::size_t m = topology.num_links();
  std::vector<double> p(result.v.data(), result.v.data() + m);
  std::vector<double> z(m);
  for (std::size_t l = 0; l < m; ++l) z[l] = program.log_rate(result.v, l);
  for (double& value : p) value = std::min(value, 1.0);
  SolveReport report;
  report.state = PrimalState::from_log_rates(topology, std::move(p), std::move(z));
  report.multipliers.assign(result.multipliers.data(), result.multipliers.data() + m);
  report.energy = energy(topology, report.state);
  report.utility = utility(report.state);
  report.cost = scalar_cost(config.lambda1, config.lambda2, report.energy, report.utility);
  report.residuals = delay_residuals(topology, report.state, config.delay_bound);
  report.kkt = kkt_residual(topology, report.state, report.multipliers, config);
  report.iterations = result.iterations;
  report.polished = result.polished;
  if (!(report.kkt.max() <= config.kkt_tolerance)) {
    std::ostringstream msg;
    msg << "KKT certificate failed: stationarity " << report.kkt.stationarity << ", feasibility "
        << report.kkt.feasibility << ", complementarity " << report.kkt.complementarity;
    throw Error(ErrorCategory::kNonConvergence, msg.str());
  }
  return report;
}

std::vector<LambdaPair> log_spaced_lambdas(double lo, double hi, int count, double lambda2) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw Error(ErrorCategory::kValidation, "log-spaced grid needs 0 < lo <= hi and count >= 1");
  }
  std::vector<LambdaPair> out;
  for (int k = 0; k < count; ++k) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out.push_back({std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo))), lambda2});
  }
  return out;
}

std::vector<TradeoffPoint> sweep(const NetworkTopology& topology,
                                 const std::vector<double>& delay_bounds,
                                 const std::vector<LambdaPair>& lambdas, const SolverConfig& base,
                                 unsigned workers) {
  auto ratio = [](const LambdaPair& w) { return w.lambda2 > 0.0 ? w.lambda1 / w.lambda2 : kInf; };
  std::vector<LambdaPair> ordered = lambdas;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [&](const LambdaPair& a, const LambdaPair& b) { return ratio(a) < ratio(b); });

  std::vector<TradeoffPoint> points;
  for (double dc : delay_bounds) {
    for (const LambdaPair& w : ordered) {
      TradeoffPoint point;
      point.delay_bound = dc;
      point.lambda1 = w.lambda1;
      point.lambda2 = w.lambda2;
      points.push_back(point);
    }
  }

  auto run_point = [&](TradeoffPoint& point) {
    SolverConfig config = base;
    config.initial.reset();
    config.delay_bound = point.delay_bound;
    config.lambda1 = point.lambda1;
    config.lambda2 = point.lambda2;
    try {
      const SolveReport report = solve(topology, config);
      point.energy = report.energy;
      point.utility = report.utility;
      point.cost = report.cost;
      point.iterations = report.iterations;
      point.status = "ok";
    } catch (const Error& e) {
      point.energy = point.utility = point.cost = std::numeric_limits<double>::quiet_NaN();
      point.status = std::string(to_string(e.category()));
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(workers, points.size()));
  if (threads == 1) {
    for (auto& point : points) run_point(point);
    return points;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < points.size(); k = next++) run_point(points[k]);
    });
  }
  pool.clear();
  return points;
}

}  // namespace raopt
