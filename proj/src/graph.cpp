#include "fdq/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fdq/binio.hpp"

namespace fdq {

namespace {

Edge norm_edge(NodeId u, NodeId v) { return u < v ? Edge{u, v} : Edge{v, u}; }

std::vector<Edge> sorted_unique(std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

MultimodalGraph build_from_directed(NodeId n, std::size_t d, std::uint32_t classes,
                                    const std::vector<Edge>& undirected,
                                    std::vector<std::uint32_t> labels, Tensor features,
                                    std::vector<std::uint8_t> train_mask,
                                    std::vector<std::uint8_t> test_mask) {
  MultimodalGraph g;
  g.n = n;
  g.d = d;
  g.num_classes = classes;
  g.labels = std::move(labels);
  g.features = std::move(features);
  g.train_mask = std::move(train_mask);
  g.test_mask = std::move(test_mask);

  std::vector<std::uint64_t> deg(n + 1, 0);
  for (const auto& [u, v] : undirected) {
    ++deg[u + 1];
    ++deg[v + 1];
  }
  g.csr_offsets.assign(n + 1, 0);
  for (NodeId i = 0; i < n; ++i) g.csr_offsets[i + 1] = g.csr_offsets[i] + deg[i + 1];
  g.csr_targets.assign(g.csr_offsets[n], 0);
  std::vector<std::uint64_t> cursor(g.csr_offsets.begin(), g.csr_offsets.end());
  for (const auto& [u, v] : undirected) {
    g.csr_targets[cursor[u]++] = v;
    g.csr_targets[cursor[v]++] = u;
  }
  for (NodeId v = 0; v < n; ++v) {
    std::sort(g.csr_targets.begin() + static_cast<std::ptrdiff_t>(g.csr_offsets[v]),
              g.csr_targets.begin() + static_cast<std::ptrdiff_t>(g.csr_offsets[v + 1]));
  }
  return g;
}

}  // namespace

bool MultimodalGraph::has_edge(NodeId u, NodeId v) const {
  if (u >= n || v >= n) return false;
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<NodeId> MultimodalGraph::train_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < n; ++v)
    if (train_mask[v]) out.push_back(v);
  return out;
}

std::vector<NodeId> MultimodalGraph::test_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < n; ++v)
    if (test_mask[v]) out.push_back(v);
  return out;
}

ForgetRequest ForgetRequest::for_nodes(std::vector<NodeId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  ForgetRequest r;
  r.kind = RequestKind::NodeUnlearn;
  r.node_ids = std::move(ids);
  return r;
}

ForgetRequest ForgetRequest::for_edges(std::vector<Edge> list) {
  for (auto& e : list) e = norm_edge(e.first, e.second);
  ForgetRequest r;
  r.kind = RequestKind::EdgeUnlearn;
  r.edges = sorted_unique(std::move(list));
  return r;
}

ForgetRequest ForgetRequest::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open request file '" + path + "'");
  std::string head;
  if (!std::getline(in, head)) throw ValueError("request file '" + path + "' is empty");
  while (!head.empty() && (head.back() == '\r' || head.back() == ' ')) head.pop_back();

  std::string line;
  if (head == "node") {
    std::vector<NodeId> ids;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      NodeId v;
      if (ls >> v) ids.push_back(v);
    }
    return for_nodes(std::move(ids));
  }
  if (head == "edge") {
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      NodeId u, v;
      if (ls >> u >> v) edges.push_back(norm_edge(u, v));
    }
    return for_edges(std::move(edges));
  }
  throw ValueError("request file '" + path + "': first line must be \"node\" or \"edge\"");
}

void ForgetRequest::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValueError("cannot open request file '" + path + "' for writing");
  if (kind == RequestKind::NodeUnlearn) {
    out << "node\n";
    for (NodeId v : node_ids) out << v << "\n";
  } else {
    out << "edge\n";
    for (const auto& [u, v] : edges) out << u << " " << v << "\n";
  }
}

MultimodalGraph make_graph(NodeId n, std::size_t d, std::uint32_t num_classes,
                           const std::vector<Edge>& edges, std::vector<std::uint32_t> labels,
                           Tensor features, std::vector<std::uint8_t> train_mask,
                           std::vector<std::uint8_t> test_mask) {
  if (num_classes < 1) throw ValueError("make_graph: need at least one class");
  if (labels.size() != n || train_mask.size() != n || test_mask.size() != n) {
    throw DimensionError("make_graph: label/mask length must equal n");
  }
  if (features.rows() != n || features.cols() != d) {
    throw DimensionError("make_graph: feature matrix must be n x d");
  }
  for (NodeId v = 0; v < n; ++v) {
    if (labels[v] >= num_classes) throw ValueError("make_graph: label out of range");
    if (train_mask[v] && test_mask[v]) throw ValueError("make_graph: masks overlap");
  }
  std::vector<Edge> normed;
  normed.reserve(edges.size());
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) throw IndexError("make_graph: edge endpoint out of range");
    if (u == v) throw ValueError("make_graph: self-loop");
    normed.push_back(norm_edge(u, v));
  }
  const std::size_t before = normed.size();
  normed = sorted_unique(std::move(normed));
  if (normed.size() != before) throw ValueError("make_graph: duplicate edge");
  return build_from_directed(n, d, num_classes, normed, std::move(labels), std::move(features),
                             std::move(train_mask), std::move(test_mask));
}

MultimodalGraph synth_graph(Rng& rng, NodeId n, std::size_t d, std::uint32_t num_classes,
                            double avg_degree, double homophily, double feature_scale) {
  if (num_classes < 2 || n < num_classes) {
    throw ValueError("synth_graph: need n >= num_classes >= 2");
  }
  if (d < 1) throw ValueError("synth_graph: d must be >= 1");
  if (avg_degree < 1.0) throw ValueError("synth_graph: avg_degree must be >= 1");
  if (avg_degree >= static_cast<double>(n)) {
    throw ValueError("synth_graph: avg_degree must be below n");
  }
  if (homophily < 0.0 || homophily > 1.0) {
    throw ValueError("synth_graph: homophily must be in [0, 1]");
  }

  std::vector<std::uint32_t> labels(n);
  std::vector<std::vector<NodeId>> by_class(num_classes);
  for (NodeId v = 0; v < n; ++v) {
    labels[v] = static_cast<std::uint32_t>(rng.below(num_classes));
    by_class[labels[v]].push_back(v);
  }

  // Per-class mean vectors, then per-node noise around the mean.
  Tensor means({num_classes, d});
  for (std::size_t i = 0; i < means.size(); ++i) means[i] = rng.normal();
  Tensor features({n, d});
  for (NodeId v = 0; v < n; ++v) {
    const double* mu = means.row(labels[v]);
    double* x = features.row(v);
    for (std::size_t j = 0; j < d; ++j) x[j] = mu[j] + feature_scale * rng.normal();
  }

  const std::size_t target = static_cast<std::size_t>(
      std::llround(avg_degree * static_cast<double>(n) / 2.0));
  std::set<Edge> chosen;
  const std::size_t max_attempts = 200 * (target + 16);
  std::size_t attempts = 0;
  while (chosen.size() < target && attempts < max_attempts) {
    ++attempts;
    const bool same = rng.uniform01() < homophily;
    const NodeId u = static_cast<NodeId>(rng.below(n));
    NodeId v = u;
    if (same) {
      const auto& pool = by_class[labels[u]];
      if (pool.size() < 2) continue;
      v = pool[rng.below(pool.size())];
    } else {
      v = static_cast<NodeId>(rng.below(n));
      if (labels[v] == labels[u]) continue;
    }
    if (u == v) continue;
    chosen.insert(norm_edge(u, v));
  }

  const NodeId train_count = static_cast<NodeId>((static_cast<std::uint64_t>(n) * 8) / 10);
  std::vector<NodeId> order(n);
  for (NodeId v = 0; v < n; ++v) order[v] = v;
  rng.shuffle(order);
  std::vector<std::uint8_t> train_mask(n, 0), test_mask(n, 0);
  for (NodeId i = 0; i < n; ++i) {
    if (i < train_count)
      train_mask[order[i]] = 1;
    else
      test_mask[order[i]] = 1;
  }

  std::vector<Edge> edges(chosen.begin(), chosen.end());
  return build_from_directed(n, d, num_classes, edges, std::move(labels), std::move(features),
                             std::move(train_mask), std::move(test_mask));
}

std::vector<NodeId> k_hop_neighbors(const MultimodalGraph& g, std::span<const NodeId> seeds,
                                    std::size_t hops) {
  std::vector<std::uint8_t> seen(g.n, 0);
  std::vector<NodeId> frontier;
  for (NodeId v : seeds) {
    if (v >= g.n) throw IndexError("k_hop_neighbors: node id out of range");
    if (!seen[v]) {
      seen[v] = 1;
      frontier.push_back(v);
    }
  }
  std::vector<NodeId> next;
  for (std::size_t h = 0; h < hops && !frontier.empty(); ++h) {
    next.clear();
    for (NodeId v : frontier) {
      for (NodeId u : g.neighbors(v)) {
        if (!seen[u]) {
          seen[u] = 1;
          next.push_back(u);
        }
      }
    }
    frontier.swap(next);
  }
  std::vector<NodeId> out;
  for (NodeId v = 0; v < g.n; ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

MultimodalGraph remove(const MultimodalGraph& g, const ForgetRequest& req) {
  std::vector<std::uint8_t> train_mask = g.train_mask;
  std::vector<Edge> kept;
  kept.reserve(g.undirected_edge_count());

  if (req.kind == RequestKind::NodeUnlearn) {
    std::vector<std::uint8_t> drop(g.n, 0);
    for (NodeId v : req.node_ids) {
      if (v >= g.n) throw IndexError("remove: node id out of range");
      if (!g.train_mask[v]) throw ValueError("remove: node " + std::to_string(v) + " is not a training node");
      drop[v] = 1;
      train_mask[v] = 0;
    }
    for (NodeId u = 0; u < g.n; ++u) {
      for (NodeId v : g.neighbors(u)) {
        if (u < v && !drop[u] && !drop[v]) kept.push_back({u, v});
      }
    }
  } else {
    for (const auto& [u, v] : req.edges) {
      if (!g.has_edge(u, v)) {
        throw NotFoundError("remove: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") does not exist");
      }
    }
    std::set<Edge> gone(req.edges.begin(), req.edges.end());
    for (NodeId u = 0; u < g.n; ++u) {
      for (NodeId v : g.neighbors(u)) {
        if (u < v && !gone.count({u, v})) kept.push_back({u, v});
      }
    }
  }
  return build_from_directed(g.n, g.d, g.num_classes, kept, g.labels, g.features,
                             std::move(train_mask), g.test_mask);
}

MultimodalGraph with_edges_added(const MultimodalGraph& g, const std::vector<Edge>& extra) {
  std::vector<Edge> all;
  all.reserve(g.undirected_edge_count() + extra.size());
  for (NodeId u = 0; u < g.n; ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v) all.push_back({u, v});
    }
  }
  for (const auto& [u, v] : extra) {
    if (u >= g.n || v >= g.n) throw IndexError("with_edges_added: endpoint out of range");
    if (u == v) throw ValueError("with_edges_added: self-loop");
    if (g.has_edge(u, v)) throw ValueError("with_edges_added: edge already present");
    all.push_back(norm_edge(u, v));
  }
  const std::size_t before = all.size();
  all = sorted_unique(std::move(all));
  if (all.size() != before) throw ValueError("with_edges_added: duplicate edge in additions");
  return build_from_directed(g.n, g.d, g.num_classes, all, g.labels, g.features, g.train_mask,
                             g.test_mask);
}

void save_graph(const MultimodalGraph& g, const std::string& path) {
  BinWriter w(path);
  w.magic("FDQG");
  w.u32(1);
  w.u64(g.n);
  w.u64(g.d);
  w.u64(g.num_classes);
  w.u64(g.csr_targets.size());
  for (std::uint64_t off : g.csr_offsets) w.u64(off);
  for (NodeId t : g.csr_targets) w.u64(t);
  for (double x : g.features.data) w.f64(x);
  for (std::uint32_t y : g.labels) w.u32(y);
  for (std::uint8_t m : g.train_mask) w.u8(m);
  for (std::uint8_t m : g.test_mask) w.u8(m);
  w.close();
}

MultimodalGraph load_graph(const std::string& path) {
  BinReader r(path);
  r.expect_magic("FDQG");
  const std::uint32_t version = r.u32();
  if (version != 1) throw FormatError("unsupported graph container version", r.offset() - 4);

  MultimodalGraph g;
  g.n = static_cast<NodeId>(r.u64());
  g.d = r.u64();
  g.num_classes = static_cast<std::uint32_t>(r.u64());
  const std::uint64_t entries = r.u64();

  g.csr_offsets.resize(g.n + 1);
  for (auto& off : g.csr_offsets) off = r.u64();
  if (g.csr_offsets[g.n] != entries) {
    throw FormatError("csr offsets disagree with adjacency entry count", r.offset());
  }
  g.csr_targets.resize(entries);
  for (auto& t : g.csr_targets) {
    const std::uint64_t v = r.u64();
    if (v >= g.n) throw FormatError("adjacency target out of range", r.offset() - 8);
    t = static_cast<NodeId>(v);
  }
  g.features = Tensor({g.n, g.d});
  for (auto& x : g.features.data) x = r.f64();
  g.labels.resize(g.n);
  for (auto& y : g.labels) y = r.u32();
  g.train_mask.resize(g.n);
  for (auto& m : g.train_mask) m = r.u8();
  g.test_mask.resize(g.n);
  for (auto& m : g.test_mask) m = r.u8();
  return g;
}

ForgetRequest sample_node_request(const MultimodalGraph& g, double ratio, Rng& rng) {
  if (ratio <= 0.0 || ratio > 1.0) throw ValueError("sample_node_request: ratio must be in (0, 1]");
  std::vector<NodeId> pool = g.train_nodes();
  if (pool.empty()) throw ValueError("sample_node_request: graph has no training nodes");
  rng.shuffle(pool);
  std::size_t count = static_cast<std::size_t>(ratio * static_cast<double>(pool.size()));
  if (count < 1) count = 1;
  pool.resize(count);
  return ForgetRequest::for_nodes(std::move(pool));
}

ForgetRequest sample_edge_request(const MultimodalGraph& g, double ratio, Rng& rng) {
  if (ratio <= 0.0 || ratio > 1.0) throw ValueError("sample_edge_request: ratio must be in (0, 1]");
  std::vector<Edge> pool;
  pool.reserve(g.undirected_edge_count());
  for (NodeId u = 0; u < g.n; ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v) pool.push_back({u, v});
    }
  }
  if (pool.empty()) throw ValueError("sample_edge_request: graph has no edges");
  rng.shuffle(pool);
  std::size_t count = static_cast<std::size_t>(ratio * static_cast<double>(pool.size()));
  if (count < 1) count = 1;
  pool.resize(count);
  return ForgetRequest::for_edges(std::move(pool));
}

}  // namespace fdq
