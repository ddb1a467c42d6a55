#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdq/model.hpp"

namespace fdq {

// Full: feature-dimension-aware quantile selection with ratio dampening.
// NoFD: same pipeline with a uniform quantile across all layers.
// NoQtl: ratio-threshold selection controlled by gamma instead of
// quantile tails.
enum class FdqMode { Full, NoFD, NoQtl };

struct FdqConfig {
  double k = 0.3;        // base selection quantile, (0, 1]
  double rho = 0.4;      // tightening ratio for wide input layers, (0, 1]
  double k_min = 0.05;   // floor for the effective quantile, (0, k]
  std::size_t tau = 512; // feature-dimension gate: tighten only when d >= tau
  double gamma = 10.0;   // maximum scaling factor, >= 1
  double eps = 1e-12;    // denominator clamp for importance ratios
  std::optional<std::size_t> hops;  // neighbor-set radius; defaults to K
  FdqMode mode = FdqMode::Full;
  bool edit_biases = true;       // bias vectors carry their layer's tag
  bool fim_on_retain = false;    // importance of retained knowledge from the
                                 // retain set instead of the full training set

  void validate() const;
  std::size_t resolve_hops(std::size_t message_layers) const {
    return hops.has_value() ? *hops : message_layers;
  }
};

const char* fdq_mode_name(FdqMode mode);
std::optional<FdqMode> fdq_mode_from_name(const std::string& name);

// Layer-wise quantile scale: max(rho, k_min/k) for input-projection
// tensors whose source dimension reaches tau, 1 otherwise. NoFD mode pins
// it to 1 everywhere.
double alpha(const ParamTensor& tensor, std::size_t d, const FdqConfig& cfg);

// Effective selection quantile alpha * k.
double k_eff(const ParamTensor& tensor, std::size_t d, const FdqConfig& cfg);

// Indices whose score falls in the quantile tail of either criterion, with
// the (score, threshold) pair recorded by first-criterion precedence.
struct SelectionResult {
  std::vector<std::size_t> indices;   // ascending
  std::vector<double> scores;         // chosen score per index
  std::vector<double> thresholds;     // matching threshold per index
  double t1 = 0.0;
  double t2 = 0.0;
  bool has_second = false;
};

SelectionResult select(const std::vector<double>& score1, const std::vector<double>* score2,
                       double k_eff_value);

// Scale factor min(score/threshold, gamma). A zero threshold only selects
// zero scores; those are zeroed outright (a parameter with no retained
// importance and no forget signal carries nothing worth keeping).
double dampening(double score, double threshold, double gamma);

struct TensorPlan {
  std::string tensor;
  LayerTag tag = LayerTag::Deep;
  std::vector<std::size_t> indices;
  std::vector<double> factors;
  // diagnostics
  double k_eff = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  bool has_second = false;
  bool dim_gate_fired = false;
  std::size_t numel = 0;
  std::size_t zero_threshold_hits = 0;
};

struct SuppressionPlan {
  std::vector<TensorPlan> tensors;

  std::size_t selected_total() const;
  bool operator==(const SuppressionPlan& other) const;
};

// Converts per-tensor suppression scores into a plan. `score2` may be null
// (single-criterion selection, e.g. edge unlearning or an empty neighbor
// set). Scores must be shape-congruent with the model.
SuppressionPlan build_plan(const GnnModel& model, const std::vector<Tensor>& score1,
                           const std::vector<Tensor>* score2, const FdqConfig& cfg);

// Multiplies every selected entry by its factor; everything else is
// bit-identical. Applying a plan twice dampens twice.
GnnModel apply_plan(const GnnModel& model, const SuppressionPlan& plan);

// Fraction of parameters living in input-projection tensors (weights and
// biases); approaches 1 as the feature dimension grows past the hidden one.
double param_ratio(const GnnModel& model);

// Text table: one row per tensor with gate, quantile, selection count and
// factor statistics.
std::string format_plan_table(const SuppressionPlan& plan);

}  // namespace fdq
