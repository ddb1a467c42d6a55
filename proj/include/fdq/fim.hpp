#pragma once

#include <span>
#include <string>
#include <vector>

#include "fdq/model.hpp"

namespace fdq {

// Per-parameter importance: average squared single-node loss gradient over
// a node set. Entries are nonnegative and shape-congruent with the model.
struct DiagFim {
  std::vector<Tensor> values;
  std::size_t source_set_size = 0;
};

DiagFim diag_fim(const GnnModel& model, const MultimodalGraph& g, std::span<const NodeId> nodes);

// The three importance estimates used by node unlearning, all taken from
// the same frozen parameters. An empty neighbor set is permitted and
// reported via `nbr_empty`; callers then skip the neighbor-ratio score.
struct FimTriple {
  DiagFim train;
  DiagFim forget;
  DiagFim nbr;
  bool nbr_empty = false;
};

FimTriple fim_triple(const GnnModel& model, const MultimodalGraph& g,
                     std::span<const NodeId> train_set, std::span<const NodeId> forget_set,
                     std::span<const NodeId> nbr_set);

// Importance dump container, magic "FDQF"; same layout as the model
// checkpoint (the source set size is not persisted).
void save_fim(const DiagFim& fim, const GnnModel& model, const std::string& path);
std::vector<Tensor> load_fim(const std::string& path);

}  // namespace fdq
