#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdq/fim.hpp"
#include "fdq/selection.hpp"

namespace fdq {

// Per-tensor selection summary kept in reports (the index lists themselves
// stay in the plan).
struct TensorDiag {
  std::string tensor;
  LayerTag tag = LayerTag::Deep;
  bool dim_gate_fired = false;
  double k_eff = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  bool has_second = false;
  std::size_t selected = 0;
  std::size_t numel = 0;
  double min_factor = 1.0;
  double mean_factor = 1.0;
  std::size_t zero_threshold_hits = 0;
};

// The timed region covers importance estimation, selection and the
// parameter update only; graph rewriting and file I/O are excluded.
struct UnlearnReport {
  std::string mode;
  std::string kind;
  std::size_t forget_size = 0;    // |forget nodes| or |forget edges|
  std::size_t influenced_size = 0;  // neighbor set (nodes) or influenced set (edges)
  bool nbr_empty = false;
  double seconds = 0.0;
  std::uint64_t pre_checksum = 0;
  std::uint64_t post_checksum = 0;
  double edited_fraction_input = 0.0;
  double edited_fraction_deep = 0.0;
  std::vector<TensorDiag> tensors;
  std::string plan_table;

  std::string to_kv() const;
  static std::string csv_header();
  std::string to_csv_row() const;
};

struct UnlearnOutcome {
  GnnModel model;
  MultimodalGraph graph;  // forget influence removed at the data layer too
  SuppressionPlan plan;
  UnlearnReport report;
};

// Node unlearning: neighbor set within `hops`, three importance estimates
// from the frozen parameters, two ratio scores per tensor, quantile
// selection with the feature-dimension gate, ratio dampening.
UnlearnOutcome unlearn_nodes(const GnnModel& model, const MultimodalGraph& g,
                             std::span<const NodeId> forget, const FdqConfig& cfg);

// Edge unlearning via the influenced node set (edge endpoints plus their
// hop neighborhood, restricted to labeled training nodes); single-score
// selection, same dampening.
UnlearnOutcome unlearn_edges(const GnnModel& model, const MultimodalGraph& g,
                             const std::vector<Edge>& forget, const FdqConfig& cfg);

UnlearnOutcome run_unlearning(const GnnModel& model, const MultimodalGraph& g,
                              const ForgetRequest& req, const FdqConfig& cfg);

// Ablation entry point; mode must be NoFD or NoQtl.
UnlearnOutcome run_ablation(const GnnModel& model, const MultimodalGraph& g,
                            const ForgetRequest& req, FdqConfig cfg, FdqMode mode);

struct OracleResult {
  GnnModel model;
  MultimodalGraph graph;
  std::vector<double> loss_trace;
};

// The ideal comparison point: honor the request at the data layer, then
// retrain from scratch from the given seed.
OracleResult retrain_oracle(const MultimodalGraph& g, const ForgetRequest& req,
                            const ModelArch& arch, const TrainConfig& tcfg, std::uint64_t seed);

// Ratio scores shared by both pipelines: retain importance over forget
// importance, and its square over the forget x neighbor product.
Tensor suppression_score_single(const Tensor& train_imp, const Tensor& forget_imp, double eps);
Tensor suppression_score_pair(const Tensor& train_imp, const Tensor& forget_imp,
                              const Tensor& nbr_imp, double eps);

}  // namespace fdq
