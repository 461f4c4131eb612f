#pragma once

#include <optional>
#include <string>
#include <vector>

#include "raopt/perf_model.hpp"
#include "raopt/topology.hpp"

namespace raopt {

/// Scalarization weights, delay bound and numerical settings.
struct SolverConfig {
  double lambda1 = 5.0;  // energy weight
  double lambda2 = 0.1;  // utility weight
  double delay_bound = 100.0;  // D_c, slots

  double feasibility_margin = 1e-9;  // residuals end at or below -margin, up to rounding
  double kkt_tolerance = 1e-6;
  int max_iterations = 20000;  // total Newton steps
  double barrier_gap = 1e-6;
  double barrier_growth = 10.0;

  double min_probability = 1e-9;
  double min_rate = 1e-9;

  /// Optional strictly feasible starting point.
  std::optional<PrimalState> initial;
};

/// Throws Error(kValidation) when weights or the delay bound are invalid.
void validate(const SolverConfig& config);

struct KktResidual {
  double stationarity = 0;      // max |dL/dv| over variables not held at a bound
  double feasibility = 0;       // max constraint violation
  double complementarity = 0;   // max |mu_l g_l| and max(0, -mu_l)

  double max() const;
};

struct SolveReport {
  PrimalState state;
  double energy = 0;
  double utility = 0;
  double cost = 0;
  std::vector<double> residuals;    // delay_residual per link
  std::vector<double> multipliers;  // mu per link
  KktResidual kkt;
  int iterations = 0;
  bool polished = false;
};

/// Solves min lambda1 E - lambda2 U over (z, p) subject to the log delay
/// constraints, 0 <= P_i <= 1 and the probability/rate boxes.
/// Throws Error(kInfeasible) when D_c <= MinDc, Error(kNonConvergence) when the
/// iteration budget runs out or the KKT certificate misses its tolerance.
SolveReport solve(const NetworkTopology& topology, const SolverConfig& config);

/// KKT residual norms of (state, multipliers) for the program `solve` targets.
KktResidual kkt_residual(const NetworkTopology& topology, const PrimalState& state,
                         const std::vector<double>& multipliers, const SolverConfig& config);

struct TradeoffPoint {
  double delay_bound = 0;
  double lambda1 = 0;
  double lambda2 = 0;
  double energy = 0;
  double utility = 0;
  double cost = 0;
  int iterations = 0;
  std::string status;  // "ok" or the error category
};

struct LambdaPair {
  double lambda1;
  double lambda2;
};

/// Solves every (D_c, lambda) combination. Points of one D_c are sorted by
/// lambda1 / lambda2. Failed points are recorded with their status and the
/// sweep continues. Work is spread over `workers` threads with deterministic
/// output order.
std::vector<TradeoffPoint> sweep(const NetworkTopology& topology,
                                 const std::vector<double>& delay_bounds,
                                 const std::vector<LambdaPair>& lambdas,
                                 const SolverConfig& base = {}, unsigned workers = 1);

/// lambda2 fixed, lambda1 log-spaced over [lo, hi] with `count` points.
std::vector<LambdaPair> log_spaced_lambdas(double lambda1_lo, double lambda1_hi, int count,
                                           double lambda2);

}  // namespace raopt
