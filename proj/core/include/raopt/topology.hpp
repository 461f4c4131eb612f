#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "raopt/error.hpp"

namespace raopt {

struct Node {
  int id = 0;
  double energy = 1.0;  // energy spent per transmitted packet

  friend bool operator==(const Node&, const Node&) = default;
};

/// Directed single-hop traffic link.
struct Link {
  int from = 0;
  int to = 0;
  double capacity = 1.0;  // packets per slot

  friend bool operator==(const Link&, const Link&) = default;
};

using NodePair = std::pair<int, int>;

/// Validated, immutable network description.
///
/// Nodes and links are addressed by dense indices (position in the input
/// lists); the original integer ids are kept for I/O. The interference
/// neighborhood is independent of the traffic links, except that every
/// link must join two neighbors.
class NetworkTopology {
 public:
  /// Validates the input and derives N_i, O_i and I_i.
  /// Throws Error(kValidation) on duplicate ids, self links, duplicate links,
  /// links between non-neighbors, unknown ids, or nonpositive
  /// capacity/energy.
  static NetworkTopology build(std::vector<Node> nodes,
                               std::vector<NodePair> neighbor_pairs,
                               std::vector<Link> links);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_links() const { return links_.size(); }

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  const Node& node(std::size_t index) const { return nodes_.at(index); }
  const Link& link(std::size_t index) const { return links_.at(index); }

  /// Neighbor pairs normalized to (min, max) id order, sorted.
  std::span<const NodePair> neighbor_pairs() const { return pairs_; }

  /// Dense index of a node id; throws Error(kValidation) if unknown.
  std::size_t node_index(int id) const;
  /// Dense index of link (from, to); throws Error(kValidation) if absent.
  std::size_t link_index(int from, int to) const;

  std::size_t transmitter(std::size_t link) const { return tx_.at(link); }
  std::size_t receiver(std::size_t link) const { return rx_.at(link); }

  /// N_i as node indices, ascending.
  std::span<const std::size_t> neighbors(std::size_t node) const {
    return neighbors_.at(node);
  }
  /// Link indices transmitted by the node (one per element of O_i).
  std::span<const std::size_t> out_links(std::size_t node) const {
    return out_.at(node);
  }
  /// Link indices received by the node (one per element of I_i).
  std::span<const std::size_t> in_links(std::size_t node) const {
    return in_.at(node);
  }

  /// Nodes that must stay idle for a transmission on `link` to succeed:
  /// the receiver j together with N_j minus the transmitter.
  std::span<const std::size_t> silence_set(std::size_t link) const {
    return silence_.at(link);
  }

  /// Links (k,l) with l in N_i or l == i, and k != i. These are exactly the
  /// links whose success requires node i to be idle.
  std::span<const std::size_t> interfering_links(std::size_t node) const {
    return interfering_.at(node);
  }

  bool are_neighbors(std::size_t a, std::size_t b) const;

  double max_capacity() const;

  // Id-level views (N_i, O_i, I_i), convenient for tests and reporting.
  std::vector<int> neighbor_ids(int id) const;
  std::vector<int> receiver_ids(int id) const;
  std::vector<int> transmitter_ids(int id) const;
  std::vector<Link> interfering_links_of(int id) const;

  friend bool operator==(const NetworkTopology& a, const NetworkTopology& b) {
    return a.nodes_ == b.nodes_ && a.pairs_ == b.pairs_ && a.links_ == b.links_;
  }

 private:
  NetworkTopology() = default;

  std::vector<Node> nodes_;
  std::vector<NodePair> pairs_;
  std::vector<Link> links_;

  std::vector<std::size_t> tx_;
  std::vector<std::size_t> rx_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> silence_;
  std::vector<std::vector<std::size_t>> interfering_;
};

/// Chain 1-2-...-n with links in both directions on every edge. n >= 2.
NetworkTopology gen_linear(int n);

/// Hub 1 with leaves 2..n. Leaves are neighbors of the hub and of their ring
/// neighbors (k, k+1) and (2, n); traffic flows leaf -> hub only. n >= 3.
NetworkTopology gen_star(int n);

/// n nodes uniform in the unit square, neighbors within `connectivity_factor`
/// of each other, links both ways on every neighbor pair. Placement is
/// redrawn until connected, at most `kGeometricRetries` times.
NetworkTopology gen_geometric(int n, double connectivity_factor,
                              std::uint64_t seed);

inline constexpr int kGeometricRetries = 100;

NetworkTopology load_topology(const std::filesystem::path& path);
void save_topology(const NetworkTopology& topology,
                   const std::filesystem::path& path);

/// Text forms of the JSON topology file.
std::string topology_to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const std::string& text);

}  // namespace raopt
