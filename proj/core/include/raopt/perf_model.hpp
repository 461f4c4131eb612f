#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "raopt/topology.hpp"

namespace raopt {

/// Per-link persistence probabilities and rates, with node totals.
///
/// Rates are kept both as r and as z = log r; the two are constructed
/// together so r == exp(z) always holds.
class PrimalState {
 public:
  PrimalState() = default;  // empty: zero links

  /// Throws Error(kValidation) if p is outside [0,1], a node total exceeds 1,
  /// a rate is nonpositive, or sizes do not match the topology.
  static PrimalState from_rates(const NetworkTopology& topology, std::vector<double> p,
                                std::vector<double> r);
  static PrimalState from_log_rates(const NetworkTopology& topology, std::vector<double> p,
                                    std::vector<double> z);

  std::span<const double> p() const { return p_; }
  std::span<const double> r() const { return r_; }
  std::span<const double> z() const { return z_; }
  /// P_i, indexed by node.
  std::span<const double> node_p() const { return node_p_; }

  double p(std::size_t link) const { return p_.at(link); }
  double r(std::size_t link) const { return r_.at(link); }
  double z(std::size_t link) const { return z_.at(link); }
  double node_p(std::size_t node) const { return node_p_.at(node); }

  std::size_t num_links() const { return p_.size(); }

 private:
  void validate(const NetworkTopology& topology);

  std::vector<double> p_;
  std::vector<double> r_;
  std::vector<double> z_;
  std::vector<double> node_p_;
};

/// Sums link probabilities into node totals P_i.
std::vector<double> node_probabilities(const NetworkTopology& topology,
                                       std::span<const double> p);

struct ServiceMoments {
  double mean = 0.0;
  double variance = 0.0;
  double second_moment = 0.0;
};

/// Moments of the geometric number of slots until the first success, where
/// each slot succeeds with probability x in (0, 1].
ServiceMoments service_moments(double success_probability);

/// Pollaczek-Khinchin mean sojourn time S + r E[S^2] / (2 (1 - r S)).
/// Throws Error(kValidation) when the load r * S reaches 1.
double pk_delay(double arrival_rate, double service_mean, double service_second_moment);

/// Closed form of pk_delay(r, service_moments(x)): (1 - r/2) / (x - r).
double link_delay(double arrival_rate, double success_probability);

/// x_ij = c_ij p_ij (1 - P_j) prod_{l in N_j \ {i}} (1 - P_l), indexed by link.
std::vector<double> link_throughput(const NetworkTopology& topology, std::span<const double> p);
std::vector<double> link_throughput(const NetworkTopology& topology, const PrimalState& state);

/// log(1/D_c + e^z (1 - 1/(2 D_c))) - log(x). Nonpositive exactly when the
/// mean delay bound D_c is met. Returns +inf when x == 0.
double delay_residual(double log_rate, double throughput, double delay_bound);

/// delay_residual for every link of the state.
std::vector<double> delay_residuals(const NetworkTopology& topology, const PrimalState& state,
                                    double delay_bound);

struct LinkMetrics {
  std::vector<double> throughput;
  std::vector<std::optional<double>> delay;  // empty when r >= x (unstable)
  std::vector<double> residual;
};

LinkMetrics link_metrics(const NetworkTopology& topology, const PrimalState& state,
                         double delay_bound);

/// U = sum of z_ij.
double utility(const PrimalState& state);
/// E = sum_i e_i P_i.
double energy(const NetworkTopology& topology, const PrimalState& state);
double energy(const NetworkTopology& topology, std::span<const double> p);
/// lambda1 E - lambda2 U.
double scalar_cost(double lambda1, double lambda2, double energy, double utility);

/// Sparse first and second derivatives of the log throughput and of the delay
/// residual with respect to the link probabilities and log rates. Shared by the
/// solvers and by the KKT certificate.
class ThroughputModel {
 public:
  explicit ThroughputModel(const NetworkTopology& topology);

  const NetworkTopology& topology() const { return *topology_; }

  /// log x_l given p and the node totals P.
  double log_throughput(std::size_t link, std::span<const double> p,
                        std::span<const double> node_p) const;

  /// Adds scale * d(log x_l)/dp into grad (indexed by link).
  void add_log_throughput_gradient(std::size_t link, std::span<const double> p,
                                   std::span<const double> node_p, double scale,
                                   std::span<double> grad) const;

  /// Visits the nonzero entries (q, q', value) of the Hessian of -log x_l with
  /// respect to p. The matrix is positive semidefinite.
  template <typename Visit>
  void visit_neg_log_throughput_hessian(std::size_t link, std::span<const double> p,
                                        std::span<const double> node_p, Visit&& visit) const {
    visit(link, link, 1.0 / (p[link] * p[link]));
    for (std::size_t k : topology_->silence_set(link)) {
      const double slack = 1.0 - node_p[k];
      const double w = 1.0 / (slack * slack);
      const auto out = topology_->out_links(k);
      for (std::size_t a : out) {
        for (std::size_t b : out) visit(a, b, w);
      }
    }
  }

  /// The rate part of the delay residual: h(z) = log(1/D + e^z (1 - 1/(2D)))
  /// with derivatives h' and h''.
  struct RateTerm {
    double value;
    double first;
    double second;
  };
  static RateTerm rate_term(double log_rate, double delay_bound);

 private:
  const NetworkTopology* topology_;
};

}  // namespace raopt
