#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdq/tensor.hpp"

namespace fdq {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;  // normalized u < v

// Undirected graph with CSR adjacency, a dense n x d feature matrix,
// class labels and disjoint train/test masks. Immutable after
// construction; removal returns a new graph.
struct MultimodalGraph {
  NodeId n = 0;
  std::size_t d = 0;
  std::uint32_t num_classes = 0;
  std::vector<std::uint64_t> csr_offsets;  // n + 1, nondecreasing
  std::vector<NodeId> csr_targets;         // sorted ascending within each row
  Tensor features;                         // n x d
  std::vector<std::uint32_t> labels;       // in [0, num_classes)
  std::vector<std::uint8_t> train_mask;
  std::vector<std::uint8_t> test_mask;

  std::span<const NodeId> neighbors(NodeId v) const {
    return {csr_targets.data() + csr_offsets[v],
            csr_targets.data() + csr_offsets[v + 1]};
  }
  std::size_t degree(NodeId v) const { return csr_offsets[v + 1] - csr_offsets[v]; }
  bool has_edge(NodeId u, NodeId v) const;
  std::size_t undirected_edge_count() const { return csr_targets.size() / 2; }

  std::vector<NodeId> train_nodes() const;
  std::vector<NodeId> test_nodes() const;
};

enum class RequestKind { NodeUnlearn, EdgeUnlearn };

// A forget request: either a set of training nodes or a set of existing
// undirected edges. Lists are kept sorted and deduplicated.
struct ForgetRequest {
  RequestKind kind = RequestKind::NodeUnlearn;
  std::vector<NodeId> node_ids;
  std::vector<Edge> edges;

  static ForgetRequest for_nodes(std::vector<NodeId> ids);
  static ForgetRequest for_edges(std::vector<Edge> list);

  // Plain text: first line "node" or "edge", then one id or "u v" per line.
  static ForgetRequest read_file(const std::string& path);
  void write_file(const std::string& path) const;
};

// Builds a validated graph from an undirected edge list. Throws on
// self-loops, duplicate edges or out-of-range endpoints/labels.
MultimodalGraph make_graph(NodeId n, std::size_t d, std::uint32_t num_classes,
                           const std::vector<Edge>& edges, std::vector<std::uint32_t> labels,
                           Tensor features, std::vector<std::uint8_t> train_mask,
                           std::vector<std::uint8_t> test_mask);

// Synthetic stand-in for encoder-produced node features: class means plus
// seeded noise, edges drawn so that an expected `homophily` fraction joins
// same-class endpoints, and an 80/20 train/test split.
MultimodalGraph synth_graph(Rng& rng, NodeId n, std::size_t d, std::uint32_t num_classes,
                            double avg_degree, double homophily, double feature_scale);

// All nodes reachable from `seeds` within h hops, seeds included.
std::vector<NodeId> k_hop_neighbors(const MultimodalGraph& g, std::span<const NodeId> seeds,
                                    std::size_t hops);

// Node requests sever all incident edges and drop train membership but keep
// the node's row; edge requests delete exactly the listed edges.
MultimodalGraph remove(const MultimodalGraph& g, const ForgetRequest& req);

// Adds previously absent undirected edges (used by poisoning scenarios).
MultimodalGraph with_edges_added(const MultimodalGraph& g, const std::vector<Edge>& extra);

// Binary graph container, magic "FDQG". Round-trips bit-exactly.
void save_graph(const MultimodalGraph& g, const std::string& path);
MultimodalGraph load_graph(const std::string& path);

// Uniform forget-set samplers used by experiment drivers.
ForgetRequest sample_node_request(const MultimodalGraph& g, double ratio, Rng& rng);
ForgetRequest sample_edge_request(const MultimodalGraph& g, double ratio, Rng& rng);

}  // namespace fdq
