#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "raopt/central_solver.hpp"
#include "raopt/perf_model.hpp"
#include "raopt/topology.hpp"

namespace raopt {

/// Prices of the per-link delay constraints.
struct DualState {
  std::vector<double> mu;
  int iteration = 0;
};

struct DistConfig {
  double lambda1 = 5.0;
  double lambda2 = 0.1;
  double delay_bound = 100.0;

  double step_size = 0.01;            // constant alpha
  double initial_probability = 0.1;   // p^0 on every link
  std::optional<double> initial_multiplier;  // defaults to 2 * lambda2
  int max_iterations = 500;
  double convergence_threshold = 0.01;  // relative cost error vs the reference
  bool stop_at_threshold = true;

  double probability_floor = 1e-6;  // p kept in [floor, 1 - floor]
  double rate_floor = 1e-9;
};

/// Throws Error(kValidation) for alpha < 0, D_c <= 1, lambda < 0, or an
/// initial multiplier not above lambda2.
void validate(const DistConfig& config);

/// Optimum used to measure convergence errors.
struct DistReference {
  double cost = 0;
  std::vector<double> p;
  std::vector<double> r;
};

DistReference reference_from(const SolveReport& report);

/// Per-iteration record. Row 0 is the initial state; row n > 0 holds the
/// primal computed from the prices of round n - 1 and the prices after the
/// dual step of round n.
struct Trace {
  std::vector<double> cost;
  std::vector<double> cost_error;  // |cost - ref| / |ref|, NaN without a reference
  std::vector<double> max_violation;  // max(0, max_l delay residual)
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> mu;
  std::vector<long> messages;  // link prices delivered in each round (0 for row 0)

  std::size_t size() const { return cost.size(); }
};

struct DistResult {
  Trace trace;
  PrimalState state;              // last primal iterate
  std::vector<double> state_prices;  // prices that produced `state`
  DualState dual;                 // prices after the last dual step
  int iterations = 0;
  std::optional<int> converged_at;  // first round below the threshold
};

/// Rate maximizing -lambda2 z + mu log(1/D + e^z (1 - 1/(2D))):
/// lambda2 / ((mu - lambda2)(D - 1/2)), capped at the link capacity. Prices at
/// or below lambda2 leave the rate unbounded, so the cap is returned; with
/// lambda2 == 0 the rate drops to `rate_floor`.
double rate_update(double mu, double lambda2, double delay_bound, double capacity,
                   double rate_floor = 1e-9);

/// Node probability P in [0, 1) solving
///   a P^2 - (a + S + M) P + M = 0,  a = lambda1 e_i,
/// i.e. the total of the per-link stationarity conditions over O_i. The
/// smaller root is taken; a == 0 reduces to P = M / (S + M). Clamped to
/// [0, 1 - floor].
double node_prob_update(double out_price_sum, double interference_price_sum,
                        double energy_weight, double floor = 1e-6);

/// p_ij = mu_ij / (a + S / (1 - P)), clamped to [floor, 1 - floor].
double link_prob_update(double mu, double energy_weight, double interference_price_sum,
                        double node_probability, double floor = 1e-6);

/// Residual used when the throughput is zero and its log is undefined.
inline constexpr double kZeroThroughputResidual = 10.0;

/// mu' = [mu + alpha (log((1 - 1/(2D)) r + 1/D) - log x)]^+
double dual_update(double mu, double rate, double throughput, double delay_bound, double alpha);

/// Synchronous dual decomposition. Each round every receiver broadcasts the
/// prices of its in-links to its neighbors, transmitters set rates and
/// probabilities from the prices they hold, and receivers take a subgradient
/// step on their in-link prices from the new rates and throughputs.
///
/// Stops after max_iterations rounds or, when a reference is given and
/// stop_at_threshold is set, at the first round whose relative cost error is
/// below the threshold. Throws Error(kNonConvergence) if the cost magnitude
/// exceeds 10x its initial value.
DistResult run(const NetworkTopology& topology, const DistConfig& config,
               const std::optional<DistReference>& reference = std::nullopt);

/// Link prices delivered in each round of the trace.
std::vector<long> message_stats(const Trace& trace);

/// sum_i |I_i| |N_i|: the per-round message count implied by the topology.
long messages_per_round(const NetworkTopology& topology);

}  // namespace raopt
