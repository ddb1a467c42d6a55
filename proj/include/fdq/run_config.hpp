#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdq/graph.hpp"
#include "fdq/model.hpp"
#include "fdq/selection.hpp"

namespace fdq {

struct GraphConfig {
  NodeId n = 2000;
  std::size_t d = 1024;
  std::uint32_t classes = 8;
  double avg_degree = 6.0;
  double homophily = 0.8;
  double feature_scale = 1.0;
};

struct ArchConfig {
  std::size_t hidden_dim = 64;
  std::size_t message_layers = 2;
};

struct ExperimentConfig {
  double forget_ratio = 0.1;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  RequestKind kind = RequestKind::NodeUnlearn;
  double poison_fraction = 0.2;
};

// One structured config drives every command; CLI flags override keys.
// File syntax is a TOML subset: one table per section, scalar and integer
// array values, '#' comments.
struct RunConfig {
  std::uint64_t seed = 42;
  GraphConfig graph;
  ArchConfig arch;
  TrainConfig train;
  FdqConfig fdq;
  ExperimentConfig experiment;

  // Throws ConfigError naming the offending field.
  void validate() const;

  static RunConfig from_file(const std::string& path);

  ModelArch model_arch() const {
    return {graph.d, arch.hidden_dim, arch.message_layers, graph.classes};
  }
};

}  // namespace fdq
