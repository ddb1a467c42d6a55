#pragma once

#include <span>
#include <vector>

#include "fdq/model.hpp"
#include "fdq/selection.hpp"
#include "fdq/unlearn.hpp"

namespace fdq {

struct F1Score {
  double micro = 0.0;  // equals accuracy for single-label classification
  double macro = 0.0;
};

F1Score f1(const GnnModel& model, const MultimodalGraph& g, std::span<const NodeId> mask_nodes);
F1Score f1_on_mask(const GnnModel& model, const MultimodalGraph& g, bool use_test_mask);

// Rank probability that a positive score beats a negative one; ties count
// half. Invariant under strictly monotone transforms of the scores.
double auc_from_scores(std::span<const double> positives, std::span<const double> negatives);

// Membership inference: a logistic attacker is trained on sorted posterior
// vectors of retained members versus half of the test nodes, then scores
// the forget nodes against the held-out test half. 0.5 means the forget
// set is indistinguishable from non-members.
double mia_auc(const GnnModel& model, const MultimodalGraph& g, std::span<const NodeId> forget,
               Rng& rng);

// Cross-class edge injection scenario. Every injected edge joins nodes
// with different labels and was absent from the clean graph.
struct PaScenario {
  double poison_fraction = 0.0;
  MultimodalGraph clean;
  MultimodalGraph poisoned;
  std::vector<Edge> injected;
};

PaScenario make_pa_scenario(const MultimodalGraph& clean, double poison_fraction, Rng& rng);

struct PaResult {
  double f1_clean = 0.0;
  double f1_poisoned = 0.0;
  double f1_unlearned = 0.0;
  double f1_oracle = 0.0;
};

// Train on the clean graph, retrain on the poisoned one, edge-unlearn
// exactly the injected edges, and compare against a from-scratch retrain on
// the de-poisoned graph. All four numbers are test micro-F1.
PaResult pa_experiment(const PaScenario& scenario, const ModelArch& arch, const TrainConfig& tcfg,
                       const FdqConfig& cfg, std::uint64_t seed);

}  // namespace fdq
