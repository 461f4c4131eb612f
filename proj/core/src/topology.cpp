#include "raopt/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace raopt {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInfeasible:
      return "infeasible";
    case ErrorCategory::kNonConvergence:
      return "non_convergence";
    case ErrorCategory::kIo:
      return "io";
    case ErrorCategory::kValidation:
      return "validation";
  }
  return "unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCategory::kValidation, message);
}

std::string link_name(const Link& link) {
  return "(" + std::to_string(link.from) + "," + std::to_string(link.to) + ")";
}

}  // namespace

NetworkTopology NetworkTopology::build(std::vector<Node> nodes,
                                       std::vector<NodePair> neighbor_pairs,
                                       std::vector<Link> links) {
  NetworkTopology t;
  std::map<int, std::size_t> index_of;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& node = nodes[i];
    if (!index_of.emplace(node.id, i).second) {
      invalid("duplicate node id " + std::to_string(node.id));
    }
    if (!(node.energy > 0.0) || !std::isfinite(node.energy)) {
      invalid("nonpositive energy for node " + std::to_string(node.id));
    }
  }
  auto lookup = [&](int id) {
    auto it = index_of.find(id);
    if (it == index_of.end()) invalid("unknown node id " + std::to_string(id));
    return it->second;
  };

  std::set<NodePair> pairs;
  for (auto [a, b] : neighbor_pairs) {
    lookup(a);
    lookup(b);
    if (a == b) invalid("node " + std::to_string(a) + " listed as its own neighbor");
    pairs.emplace(std::min(a, b), std::max(a, b));
  }

  const std::size_t n = nodes.size();
  t.neighbors_.assign(n, {});
  for (auto [a, b] : pairs) {
    t.neighbors_[lookup(a)].push_back(lookup(b));
    t.neighbors_[lookup(b)].push_back(lookup(a));
  }
  for (auto& list : t.neighbors_) std::sort(list.begin(), list.end());

  t.out_.assign(n, {});
  t.in_.assign(n, {});
  std::set<std::pair<int, int>> seen_links;
  for (std::size_t l = 0; l < links.size(); ++l) {
    const Link& link = links[l];
    if (link.from == link.to) invalid("self-link " + link_name(link));
    const std::size_t i = lookup(link.from);
    const std::size_t j = lookup(link.to);
    if (!seen_links.emplace(link.from, link.to).second) {
      invalid("duplicate link " + link_name(link));
    }
    if (!pairs.contains({std::min(link.from, link.to), std::max(link.from, link.to)})) {
      invalid("link between non-neighbors " + link_name(link));
    }
    if (!(link.capacity > 0.0) || !std::isfinite(link.capacity)) {
      invalid("nonpositive capacity on link " + link_name(link));
    }
    t.tx_.push_back(i);
    t.rx_.push_back(j);
    t.out_[i].push_back(l);
    t.in_[j].push_back(l);
  }

  t.silence_.resize(links.size());
  for (std::size_t l = 0; l < links.size(); ++l) {
    const std::size_t i = t.tx_[l];
    const std::size_t j = t.rx_[l];
    auto& silent = t.silence_[l];
    silent.push_back(j);
    for (std::size_t k : t.neighbors_[j]) {
      if (k != i) silent.push_back(k);
    }
    std::sort(silent.begin(), silent.end());
  }

  t.interfering_.assign(n, {});
  for (std::size_t l = 0; l < links.size(); ++l) {
    for (std::size_t k : t.silence_[l]) t.interfering_[k].push_back(l);
  }

  t.nodes_ = std::move(nodes);
  t.pairs_.assign(pairs.begin(), pairs.end());
  t.links_ = std::move(links);
  return t;
}

std::size_t NetworkTopology::node_index(int id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  invalid("unknown node id " + std::to_string(id));
}

std::size_t NetworkTopology::link_index(int from, int to) const {
  for (std::size_t l = 0; l < links_.size(); ++l) {
    if (links_[l].from == from && links_[l].to == to) return l;
  }
  invalid("unknown link " + link_name(Link{from, to}));
}

bool NetworkTopology::are_neighbors(std::size_t a, std::size_t b) const {
  const auto& list = neighbors_.at(a);
  return std::binary_search(list.begin(), list.end(), b);
}

double NetworkTopology::max_capacity() const {
  double c = 0.0;
  for (const Link& link : links_) c = std::max(c, link.capacity);
  return c;
}

std::vector<int> NetworkTopology::neighbor_ids(int id) const {
  std::vector<int> out;
  for (std::size_t k : neighbors_[node_index(id)]) out.push_back(nodes_[k].id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> NetworkTopology::receiver_ids(int id) const {
  std::vector<int> out;
  for (std::size_t l : out_[node_index(id)]) out.push_back(links_[l].to);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> NetworkTopology::transmitter_ids(int id) const {
  std::vector<int> out;
  for (std::size_t l : in_[node_index(id)]) out.push_back(links_[l].from);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Link> NetworkTopology::interfering_links_of(int id) const {
  std::vector<Link> out;
  for (std::size_t l : interfering_[node_index(id)]) out.push_back(links_[l]);
  return out;
}

NetworkTopology gen_linear(int n) {
  if (n < 2) invalid("linear topology needs n >= 2");
  std::vector<Node> nodes;
  std::vector<NodePair> pairs;
  std::vector<Link> links;
  for (int k = 1; k <= n; ++k) nodes.push_back({k});
  for (int k = 1; k < n; ++k) {
    pairs.emplace_back(k, k + 1);
    links.push_back({k, k + 1});
    links.push_back({k + 1, k});
  }
  return NetworkTopology::build(std::move(nodes), std::move(pairs), std::move(links));
}

NetworkTopology gen_star(int n) {
  if (n < 3) invalid("star topology needs n >= 3");
  std::vector<Node> nodes;
  std::vector<NodePair> pairs;
  std::vector<Link> links;
  for (int k = 1; k <= n; ++k) nodes.push_back({k});
  for (int k = 2; k <= n; ++k) {
    pairs.emplace_back(1, k);
    links.push_back({k, 1});
  }
  for (int k = 2; k < n; ++k) pairs.emplace_back(k, k + 1);
  pairs.emplace_back(2, n);  // closes the leaf ring; duplicates (n == 3) are merged
  return NetworkTopology::build(std::move(nodes), std::move(pairs), std::move(links));
}

namespace {

bool connected(int n, const std::vector<NodePair>& pairs) {
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : pairs) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int count = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        frontier.push(v);
      }
    }
  }
  return count == n;
}

}  // namespace

NetworkTopology gen_geometric(int n, double connectivity_factor, std::uint64_t seed) {
  if (n < 2) invalid("geometric topology needs n >= 2");
  if (!(connectivity_factor > 0.0) || connectivity_factor > std::sqrt(2.0)) {
    invalid("connectivity factor must lie in (0, sqrt(2)]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < kGeometricRetries; ++attempt) {
    std::vector<std::pair<double, double>> pos(n);
    for (auto& [x, y] : pos) {
      x = unit(rng);
      y = unit(rng);
    }
    std::vector<NodePair> zero_based;
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const double d = std::hypot(pos[a].first - pos[b].first, pos[a].second - pos[b].second);
        if (d <= connectivity_factor) zero_based.emplace_back(a, b);
      }
    }
    if (!connected(n, zero_based)) continue;

    std::vector<Node> nodes;
    std::vector<NodePair> pairs;
    std::vector<Link> links;
    for (int k = 1; k <= n; ++k) nodes.push_back({k});
    for (auto [a, b] : zero_based) {
      pairs.emplace_back(a + 1, b + 1);
      links.push_back({a + 1, b + 1});
      links.push_back({b + 1, a + 1});
    }
    return NetworkTopology::build(std::move(nodes), std::move(pairs), std::move(links));
  }
  invalid("no connected placement found after " + std::to_string(kGeometricRetries) +
          " attempts");
}

std::string topology_to_json(const NetworkTopology& topology) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const Node& node : topology.nodes()) {
    doc["nodes"].push_back({{"id", node.id}, {"energy", node.energy}});
  }
  doc["neighbors"] = nlohmann::ordered_json::array();
  for (auto [a, b] : topology.neighbor_pairs()) doc["neighbors"].push_back({a, b});
  doc["links"] = nlohmann::ordered_json::array();
  for (const Link& link : topology.links()) {
    doc["links"].push_back(
        {{"from", link.from}, {"to", link.to}, {"capacity", link.capacity}});
  }
  return doc.dump(2) + "\n";
}

NetworkTopology topology_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("malformed topology JSON: ") + e.what());
  }
  try {
    for (const char* key : {"nodes", "neighbors", "links"}) {
      if (!doc.contains(key)) invalid(std::string("topology file missing \"") + key + "\"");
    }
    std::vector<Node> nodes;
    for (const auto& item : doc.at("nodes")) {
      nodes.push_back({item.at("id").get<int>(), item.value("energy", 1.0)});
    }
    std::vector<NodePair> pairs;
    for (const auto& item : doc.at("neighbors")) {
      if (!item.is_array() || item.size() != 2) invalid("neighbor entries must be [a, b]");
      pairs.emplace_back(item[0].get<int>(), item[1].get<int>());
    }
    std::vector<Link> links;
    for (const auto& item : doc.at("links")) {
      links.push_back({item.at("from").get<int>(), item.at("to").get<int>(),
                       item.value("capacity", 1.0)});
    }
    return NetworkTopology::build(std::move(nodes), std::move(pairs), std::move(links));
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("malformed topology JSON: ") + e.what());
  }
}

NetworkTopology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return topology_from_json(buffer.str());
}

void save_topology(const NetworkTopology& topology, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  out << topology_to_json(topology);
  if (!out) throw Error(ErrorCategory::kIo, "write failed for " + path.string());
}

}  // namespace raopt
