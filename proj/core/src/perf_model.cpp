#include "raopt/perf_model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace raopt {

namespace {

constexpr double kProbabilitySlack = 1e-12;

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCategory::kValidation, message);
}

}  // namespace

PrimalState PrimalState::from_rates(const NetworkTopology& topology, std::vector<double> p,
                                    std::vector<double> r) {
  PrimalState s;
  s.p_ = std::move(p);
  s.r_ = std::move(r);
  s.z_.resize(s.r_.size());
  for (std::size_t l = 0; l < s.r_.size(); ++l) {
    if (!(s.r_[l] > 0.0)) invalid("rate on link " + std::to_string(l) + " must be positive");
    s.z_[l] = std::log(s.r_[l]);
  }
  s.validate(topology);
  return s;
}

PrimalState PrimalState::from_log_rates(const NetworkTopology& topology, std::vector<double> p,
                                        std::vector<double> z) {
  PrimalState s;
  s.p_ = std::move(p);
  s.z_ = std::move(z);
  s.r_.resize(s.z_.size());
  for (std::size_t l = 0; l < s.z_.size(); ++l) {
    if (!std::isfinite(s.z_[l])) invalid("log rate on link " + std::to_string(l) + " not finite");
    s.r_[l] = std::exp(s.z_[l]);
  }
  s.validate(topology);
  return s;
}

void PrimalState::validate(const NetworkTopology& topology) {
  if (p_.size() != topology.num_links() || z_.size() != topology.num_links()) {
    invalid("state size does not match the link count");
  }
  for (std::size_t l = 0; l < p_.size(); ++l) {
    if (!(p_[l] >= 0.0 && p_[l] <= 1.0)) {
      invalid("probability on link " + std::to_string(l) + " outside [0,1]");
    }
  }
  node_p_ = node_probabilities(topology, p_);
  for (std::size_t i = 0; i < node_p_.size(); ++i) {
    if (node_p_[i] > 1.0 + kProbabilitySlack) {
      invalid("node " + std::to_string(topology.node(i).id) + " transmits with probability > 1");
    }
  }
}

std::vector<double> node_probabilities(const NetworkTopology& topology,
                                       std::span<const double> p) {
  std::vector<double> node_p(topology.num_nodes(), 0.0);
  for (std::size_t i = 0; i < topology.num_nodes(); ++i) {
    for (std::size_t l : topology.out_links(i)) node_p[i] += p[l];
  }
  return node_p;
}

ServiceMoments service_moments(double x) {
  if (!(x > 0.0 && x <= 1.0)) invalid("success probability must lie in (0, 1]");
  ServiceMoments m;
  m.mean = 1.0 / x;
  m.variance = (1.0 - x) / (x * x);
  m.second_moment = (2.0 - x) / (x * x);
  return m;
}

double pk_delay(double r, double mean, double second_moment) {
  if (!(r >= 0.0)) invalid("arrival rate must be nonnegative");
  const double load = r * mean;
  if (load >= 1.0) invalid("queue is unstable (load >= 1)");
  return mean + r * second_moment / (2.0 * (1.0 - load));
}

double link_delay(double r, double x) {
  if (!(x > 0.0 && x <= 1.0)) invalid("success probability must lie in (0, 1]");
  if (!(r >= 0.0)) invalid("arrival rate must be nonnegative");
  if (r >= x) invalid("queue is unstable (r >= x)");
  return (1.0 - 0.5 * r) / (x - r);
}

std::vector<double> link_throughput(const NetworkTopology& topology, std::span<const double> p) {
  const auto node_p = node_probabilities(topology, p);
  std::vector<double> x(topology.num_links());
  for (std::size_t l = 0; l < x.size(); ++l) {
    double value = topology.link(l).capacity * p[l];
    for (std::size_t k : topology.silence_set(l)) value *= (1.0 - node_p[k]);
    x[l] = std::max(value, 0.0);
  }
  return x;
}

std::vector<double> link_throughput(const NetworkTopology& topology, const PrimalState& state) {
  return link_throughput(topology, state.p());
}

double delay_residual(double log_rate, double throughput, double delay_bound) {
  if (!(throughput > 0.0)) return std::numeric_limits<double>::infinity();
  return ThroughputModel::rate_term(log_rate, delay_bound).value - std::log(throughput);
}

std::vector<double> delay_residuals(const NetworkTopology& topology, const PrimalState& state,
                                    double delay_bound) {
  const auto x = link_throughput(topology, state);
  std::vector<double> g(x.size());
  for (std::size_t l = 0; l < x.size(); ++l) g[l] = delay_residual(state.z(l), x[l], delay_bound);
  return g;
}

LinkMetrics link_metrics(const NetworkTopology& topology, const PrimalState& state,
                         double delay_bound) {
  LinkMetrics m;
  m.throughput = link_throughput(topology, state);
  m.delay.resize(m.throughput.size());
  m.residual.resize(m.throughput.size());
  for (std::size_t l = 0; l < m.throughput.size(); ++l) {
    const double x = m.throughput[l];
    if (x > state.r(l) && x <= 1.0) m.delay[l] = link_delay(state.r(l), x);
    m.residual[l] = delay_residual(state.z(l), x, delay_bound);
  }
  return m;
}

double utility(const PrimalState& state) {
  double u = 0.0;
  for (double z : state.z()) u += z;
  return u;
}

double energy(const NetworkTopology& topology, std::span<const double> p) {
  double e = 0.0;
  for (std::size_t l = 0; l < topology.num_links(); ++l) {
    e += topology.node(topology.transmitter(l)).energy * p[l];
  }
  return e;
}

double energy(const NetworkTopology& topology, const PrimalState& state) {
  return energy(topology, state.p());
}

double scalar_cost(double lambda1, double lambda2, double energy, double utility) {
  return lambda1 * energy - lambda2 * utility;
}

ThroughputModel::ThroughputModel(const NetworkTopology& topology) : topology_(&topology) {}

double ThroughputModel::log_throughput(std::size_t link, std::span<const double> p,
                                       std::span<const double> node_p) const {
  double value = std::log(topology_->link(link).capacity) + std::log(p[link]);
  for (std::size_t k : topology_->silence_set(link)) value += std::log1p(-node_p[k]);
  return value;
}

void ThroughputModel::add_log_throughput_gradient(std::size_t link, std::span<const double> p,
                                                  std::span<const double> node_p, double scale,
                                                  std::span<double> grad) const {
  grad[link] += scale / p[link];
  for (std::size_t k : topology_->silence_set(link)) {
    const double w = scale / (1.0 - node_p[k]);
    for (std::size_t q : topology_->out_links(k)) grad[q] -= w;
  }
}

ThroughputModel::RateTerm ThroughputModel::rate_term(double z, double delay_bound) {
  const double a = 1.0 / delay_bound;
  const double b = 1.0 - 0.5 / delay_bound;
  const double be = b * std::exp(z);
  const double sigma = be / (a + be);
  return {std::log(a + be), sigma, sigma * (1.0 - sigma)};
}

}  // namespace raopt
