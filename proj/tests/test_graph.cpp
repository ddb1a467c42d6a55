#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fdq/graph.hpp"
#include "oracles.hpp"

using namespace fdq;

namespace {

double edge_homophily(const MultimodalGraph& g) {
  std::size_t same = 0, total = 0;
  for (NodeId u = 0; u < g.n; ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v) {
        ++total;
        if (g.labels[u] == g.labels[v]) ++same;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(total);
}

void check_symmetric_no_loops(const MultimodalGraph& g) {
  for (NodeId u = 0; u < g.n; ++u) {
    auto nb = g.neighbors(u);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      CHECK(nb[i] != u);
      if (i > 0) CHECK(nb[i] > nb[i - 1]);  // sorted, no duplicates
      CHECK(g.has_edge(nb[i], u));
    }
  }
  CHECK(g.csr_offsets.front() == 0);
  CHECK(g.csr_offsets.back() == g.csr_targets.size());
}

std::vector<std::uint8_t> graph_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("synth_graph with homophily one only joins same-class nodes") {
  Rng rng(3);
  const MultimodalGraph g = synth_graph(rng, 4, 4, 2, 1.0, 1.0, 0.5);
  for (NodeId u = 0; u < g.n; ++u) {
    for (NodeId v : g.neighbors(u)) CHECK(g.labels[u] == g.labels[v]);
  }
  check_symmetric_no_loops(g);
}

TEST_CASE("synth_graph hits the requested homophily within tolerance") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const MultimodalGraph g = synth_graph(rng, 200, 64, 4, 8.0, 0.8, 1.0);
    total += edge_homophily(g);
    check_symmetric_no_loops(g);
  }
  CHECK(total / 10.0 == doctest::Approx(0.8).epsilon(0.0625));  // +-0.05 absolute
}

TEST_CASE("synth_graph is deterministic per seed and splits 80/20") {
  Rng r1(42), r2(42);
  const MultimodalGraph a = synth_graph(r1, 100, 8, 3, 4.0, 0.7, 1.0);
  const MultimodalGraph b = synth_graph(r2, 100, 8, 3, 4.0, 0.7, 1.0);
  CHECK(a.csr_targets == b.csr_targets);
  CHECK(a.labels == b.labels);
  CHECK(oracles::bit_equal(a.features, b.features));
  CHECK(a.train_mask == b.train_mask);
  CHECK(a.train_nodes().size() == 80);
  CHECK(a.test_nodes().size() == 20);
  for (NodeId v = 0; v < a.n; ++v) CHECK((a.train_mask[v] ^ a.test_mask[v]) == 1);
}

TEST_CASE("synth_graph rejects infeasible parameters") {
  Rng rng(1);
  CHECK_THROWS_AS(synth_graph(rng, 10, 4, 2, 10.0, 0.5, 1.0), ValueError);
  CHECK_THROWS_AS(synth_graph(rng, 10, 4, 2, 4.0, 1.5, 1.0), ValueError);
  CHECK_THROWS_AS(synth_graph(rng, 3, 4, 4, 1.0, 0.5, 1.0), ValueError);
}

TEST_CASE("k_hop_neighbors on a path") {
  // 0 - 1 - 2 - 3
  const MultimodalGraph g = oracles::tiny_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  const std::vector<NodeId> seeds{1};

  CHECK(k_hop_neighbors(g, seeds, 0) == std::vector<NodeId>{1});
  CHECK(k_hop_neighbors(g, seeds, 1) == std::vector<NodeId>{0, 1, 2});
  CHECK(k_hop_neighbors(g, seeds, 2) == std::vector<NodeId>{0, 1, 2, 3});

  const std::vector<NodeId> bad{9};
  CHECK_THROWS_AS(k_hop_neighbors(g, bad, 1), IndexError);
}

TEST_CASE("k_hop_neighbors matches brute-force traversal on random graphs") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const NodeId n = static_cast<NodeId>(5 + rng.below(46));
    const MultimodalGraph g = synth_graph(rng, n, 4, 2, 2.0, 0.5, 1.0);
    std::vector<NodeId> seeds;
    const std::size_t count = 1 + rng.below(3);
    for (std::size_t i = 0; i < count; ++i) seeds.push_back(static_cast<NodeId>(rng.below(n)));
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    const std::size_t hops = rng.below(4);
    CHECK(k_hop_neighbors(g, seeds, hops) == oracles::bfs_oracle(g, seeds, hops));
  }
}

TEST_CASE("node removal severs all incident edges but keeps rows") {
  // 0 - 1 - 2
  const MultimodalGraph g = oracles::tiny_graph(3, {{0, 1}, {1, 2}});
  const MultimodalGraph r = remove(g, ForgetRequest::for_nodes({1}));
  CHECK(r.n == 3);
  CHECK(r.undirected_edge_count() == 0);
  CHECK(r.train_mask[1] == 0);
  CHECK(r.train_mask[0] == 1);
  CHECK(oracles::bit_equal(r.features, g.features));
  check_symmetric_no_loops(r);
}

TEST_CASE("edge removal deletes exactly the listed edges") {
  const MultimodalGraph g = oracles::tiny_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  const MultimodalGraph r = remove(g, ForgetRequest::for_edges({{0, 1}}));
  CHECK(r.degree(0) == 1);
  CHECK(r.degree(1) == 1);
  CHECK(r.degree(2) == 2);
  check_symmetric_no_loops(r);

  CHECK_THROWS_AS(remove(r, ForgetRequest::for_edges({{0, 1}})), NotFoundError);
  const MultimodalGraph r2 = remove(r, ForgetRequest::for_edges({{1, 2}}));
  CHECK(r2.undirected_edge_count() == 1);
}

TEST_CASE("removing nodes leaves no adjacency entry touching them") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const MultimodalGraph g = synth_graph(rng, 60, 4, 3, 4.0, 0.6, 1.0);
    std::vector<NodeId> forget;
    for (NodeId v : g.train_nodes()) {
      if (rng.uniform01() < 0.2) forget.push_back(v);
    }
    if (forget.empty()) forget.push_back(g.train_nodes()[0]);
    const MultimodalGraph r = remove(g, ForgetRequest::for_nodes(forget));
    const std::set<NodeId> fs(forget.begin(), forget.end());
    for (NodeId t : r.csr_targets) CHECK(fs.count(t) == 0);
    for (NodeId v : forget) CHECK(r.degree(v) == 0);
    check_symmetric_no_loops(r);
  }
}

TEST_CASE("graph container round-trips bit-exactly") {
  Rng rng(11);
  const MultimodalGraph g = synth_graph(rng, 50, 16, 3, 4.0, 0.7, 1.3);
  const std::string p1 = "test_graph_a.fdqg";
  const std::string p2 = "test_graph_b.fdqg";
  save_graph(g, p1);
  const MultimodalGraph loaded = load_graph(p1);
  save_graph(loaded, p2);
  CHECK(graph_bytes(p1) == graph_bytes(p2));
  CHECK(loaded.csr_targets == g.csr_targets);
  CHECK(oracles::bit_equal(loaded.features, g.features));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("graph loader reports truncation and bad magic") {
  Rng rng(12);
  const MultimodalGraph g = synth_graph(rng, 20, 4, 2, 2.0, 0.5, 1.0);
  const std::string path = "test_graph_broken.fdqg";
  save_graph(g, path);

  const auto bytes = graph_bytes(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_graph(path), FormatError);

  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "NOPE";
    out.write(reinterpret_cast<const char*>(bytes.data() + 4),
              static_cast<std::streamsize>(bytes.size() - 4));
  }
  try {
    load_graph(path);
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("FDQG") != std::string::npos);
    CHECK(e.offset == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("forget request files round-trip") {
  const std::string path = "test_request.txt";
  const ForgetRequest nodes = ForgetRequest::for_nodes({5, 1, 3, 3});
  nodes.write_file(path);
  const ForgetRequest back = ForgetRequest::read_file(path);
  CHECK(back.kind == RequestKind::NodeUnlearn);
  CHECK(back.node_ids == std::vector<NodeId>{1, 3, 5});

  const ForgetRequest edges = ForgetRequest::for_edges({{4, 2}, {1, 0}});
  edges.write_file(path);
  const ForgetRequest eback = ForgetRequest::read_file(path);
  CHECK(eback.kind == RequestKind::EdgeUnlearn);
  CHECK(eback.edges == std::vector<Edge>{{0, 1}, {2, 4}});

  {
    std::ofstream out(path, std::ios::trunc);
    out << "sideways\n1\n";
  }
  CHECK_THROWS_AS(ForgetRequest::read_file(path), ValueError);
  std::remove(path.c_str());
}

TEST_CASE("request samplers honor the ratio") {
  Rng rng(5);
  const MultimodalGraph g = synth_graph(rng, 200, 8, 4, 6.0, 0.8, 1.0);
  Rng r1(7);
  const ForgetRequest nodes = sample_node_request(g, 0.1, r1);
  CHECK(nodes.node_ids.size() == g.train_nodes().size() / 10);
  for (NodeId v : nodes.node_ids) CHECK(g.train_mask[v] == 1);

  Rng r2(7);
  const ForgetRequest edges = sample_edge_request(g, 0.1, r2);
  CHECK(edges.edges.size() == g.undirected_edge_count() / 10);
  for (const auto& [u, v] : edges.edges) CHECK(g.has_edge(u, v));
}
