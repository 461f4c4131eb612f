#include "raopt/dist_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace raopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Message {
  std::size_t link;
  double mu;
};

/// What one node knows during a round: the prices of its own in-links plus
/// everything its neighbors broadcast.
class NodeAgent {
 public:
  NodeAgent(const NetworkTopology& topology, std::size_t node) : topology_(topology), node_(node) {}

  void clear() { known_.clear(); }
  void receive(const Message& message) { known_[message.link] = message.mu; }

  double price(std::size_t link) const {
    auto it = known_.find(link);
    if (it == known_.end()) {
      throw Error(ErrorCategory::kValidation,
                  "node " + std::to_string(topology_.node(node_).id) +
                      " has no price for link " + std::to_string(link));
    }
    return it->second;
  }

  /// M_i: prices of the node's own out-links.
  double out_price_sum() const {
    double sum = 0.0;
    for (std::size_t l : topology_.out_links(node_)) sum += price(l);
    return sum;
  }

  /// S_i: prices of links that need this node silent.
  double interference_price_sum() const {
    double sum = 0.0;
    for (std::size_t l : topology_.interfering_links(node_)) sum += price(l);
    return sum;
  }

 private:
  const NetworkTopology& topology_;
  std::size_t node_;
  std::unordered_map<std::size_t, double> known_;
};

double relative_error(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

}  // namespace

void validate(const DistConfig& config) {
  auto fail = [](const std::string& message) { throw Error(ErrorCategory::kValidation, message); };
  if (!(config.lambda1 >= 0.0) || !(config.lambda2 >= 0.0)) fail("lambda weights must be >= 0");
  if (!(config.lambda1 + config.lambda2 > 0.0)) fail("lambda1 and lambda2 cannot both be 0");
  if (!(config.delay_bound > 1.0) || !std::isfinite(config.delay_bound)) {
    fail("delay bound must be a finite value > 1 slot");
  }
  if (!(config.step_size >= 0.0)) fail("step size must be >= 0");
  if (!(config.initial_probability > 0.0 && config.initial_probability < 1.0)) {
    fail("initial probability must lie in (0, 1)");
  }
  const double mu0 = config.initial_multiplier.value_or(2.0 * config.lambda2);
  if (!(mu0 > config.lambda2)) fail("initial multiplier must exceed lambda2");
  if (config.max_iterations < 0) fail("iteration limit must be >= 0");
  if (!(config.probability_floor > 0.0 && config.probability_floor < 0.5)) {
    fail("probability floor must lie in (0, 0.5)");
  }
  if (!(config.rate_floor > 0.0)) fail("rate floor must be positive");
}

DistReference reference_from(const SolveReport& report) {
  const auto p = report.state.p();
  const auto r = report.state.r();
  return {report.cost, {p.begin(), p.end()}, {r.begin(), r.end()}};
}

double rate_update(double mu, double lambda2, double delay_bound, double capacity,
                   double rate_floor) {
  if (lambda2 <= 0.0) return rate_floor;
  if (mu <= lambda2) return capacity;
  const double r = lambda2 / ((mu - lambda2) * (delay_bound - 0.5));
  return std::clamp(r, rate_floor, capacity);
}

double node_prob_update(double out_price_sum, double interference_price_sum,
                        double energy_weight, double floor) {
  const double a = energy_weight;
  const double b = a + interference_price_sum + out_price_sum;
  const double c = out_price_sum;
  if (c <= 0.0 || b <= 0.0) return 0.0;
  double root;
  if (a > 0.0) {
    // Smaller root of a P^2 - b P + c, in the cancellation-free form.
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    root = 2.0 * c / (b + std::sqrt(disc));
  } else {
    root = c / b;
  }
  return std::clamp(root, 0.0, 1.0 - floor);
}

double link_prob_update(double mu, double energy_weight, double interference_price_sum,
                        double node_probability, double floor) {
  const double denom = energy_weight + interference_price_sum / (1.0 - node_probability);
  if (!(denom > 0.0)) return 1.0 - floor;
  return std::clamp(mu / denom, floor, 1.0 - floor);
}

double dual_update(double mu, double rate, double throughput, double delay_bound, double alpha) {
  double residual = kZeroThroughputResidual;
  if (throughput > 0.0) {
    residual = std::log((1.0 - 0.5 / delay_bound) * rate + 1.0 / delay_bound) -
               std::log(throughput);
  }
  return std::max(0.0, mu + alpha * residual);
}

long messages_per_round(const NetworkTopology& topology) {
  long count = 0;
  for (std::size_t i = 0; i < topology.num_nodes(); ++i) {
    count += static_cast<long>(topology.in_links(i).size() * topology.neighbors(i).size());
  }
  return count;
}

std::vector<long> message_stats(const Trace& trace) { return trace.messages; }

DistResult run(const NetworkTopology& topology, const DistConfig& config,
               const std::optional<DistReference>& reference) {
  validate(config);
  const std::size_t m = topology.num_links();
  const std::size_t n_nodes = topology.num_nodes();
  if (m == 0) throw Error(ErrorCategory::kValidation, "topology has no links");
  if (reference && (reference->p.size() != m || reference->r.size() != m)) {
    throw Error(ErrorCategory::kValidation, "reference does not match the topology");
  }

  const double lambda1 = config.lambda1;
  const double lambda2 = config.lambda2;
  const double dc = config.delay_bound;

  std::vector<double> mu(m, config.initial_multiplier.value_or(2.0 * lambda2));

  // Initial primal: p^0 on every link (scaled down where a node would exceed
  // probability one), rates from the initial prices.
  std::vector<double> p(m), r(m);
  for (std::size_t l = 0; l < m; ++l) {
    const auto degree = static_cast<double>(topology.out_links(topology.transmitter(l)).size());
    p[l] = std::min(config.initial_probability, (1.0 - config.probability_floor) / degree);
    r[l] = rate_update(mu[l], lambda2, dc, topology.link(l).capacity, config.rate_floor);
  }

  DistResult result;
  result.state = PrimalState::from_rates(topology, p, r);
  Trace& trace = result.trace;

  auto record = [&](const PrimalState& state, long messages) {
    const double cost =
        scalar_cost(lambda1, lambda2, energy(topology, state), utility(state));
    trace.cost.push_back(cost);
    trace.cost_error.push_back(reference ? relative_error(cost, reference->cost) : kNaN);
    double violation = 0.0;
    for (double g : delay_residuals(topology, state, dc)) violation = std::max(violation, g);
    trace.max_violation.push_back(violation);
    trace.p.emplace_back(state.p().begin(), state.p().end());
    trace.r.emplace_back(state.r().begin(), state.r().end());
    trace.mu.push_back(mu);
    trace.messages.push_back(messages);
    return cost;
  };

  const double initial_cost = record(result.state, 0);
  result.state_prices = mu;

  std::vector<NodeAgent> agents;
  agents.reserve(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) agents.emplace_back(topology, i);
  std::vector<double> node_p(n_nodes);

  for (int round = 1; round <= config.max_iterations; ++round) {
    // (1) Price exchange: receivers own the prices of their in-links.
    long messages = 0;
    for (auto& agent : agents) agent.clear();
    for (std::size_t j = 0; j < n_nodes; ++j) {
      for (std::size_t l : topology.in_links(j)) {
        const Message message{l, mu[l]};
        agents[j].receive(message);
        for (std::size_t k : topology.neighbors(j)) {
          agents[k].receive(message);
          ++messages;
        }
      }
    }

    // (2) Rates and (3) probabilities from the prices each node holds.
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const auto out = topology.out_links(i);
      if (out.empty()) {
        node_p[i] = 0.0;
        continue;
      }
      const NodeAgent& agent = agents[i];
      const double weight = lambda1 * topology.node(i).energy;
      const double s = agent.interference_price_sum();
      node_p[i] = node_prob_update(agent.out_price_sum(), s, weight, config.probability_floor);
      for (std::size_t l : out) {
        const double price = agent.price(l);
        r[l] = rate_update(price, lambda2, dc, topology.link(l).capacity, config.rate_floor);
        p[l] = link_prob_update(price, weight, s, node_p[i], config.probability_floor);
      }
    }
    result.state = PrimalState::from_rates(topology, p, r);
    result.state_prices = mu;

    // (4) Price step from the new rates and throughputs.
    const auto x = link_throughput(topology, result.state);
    for (std::size_t l = 0; l < m; ++l) mu[l] = dual_update(mu[l], r[l], x[l], dc, config.step_size);

    const double cost = record(result.state, messages);
    result.iterations = round;
    if (std::abs(cost) > 10.0 * std::abs(initial_cost)) {
      std::ostringstream msg;
      msg << "distributed iteration diverged at round " << round << ": cost " << cost
          << " vs initial " << initial_cost << "; try a smaller step size";
      throw Error(ErrorCategory::kNonConvergence, msg.str());
    }
    if (reference && !result.converged_at &&
        trace.cost_error.back() < config.convergence_threshold) {
      result.converged_at = round;
      if (config.stop_at_threshold) break;
    }
  }
  result.dual = {mu, result.iterations};
  return result;
}

}  // namespace raopt
