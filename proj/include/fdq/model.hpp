#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdq/graph.hpp"
#include "fdq/tensor.hpp"

namespace fdq {

// The d-facing projection layer is tagged so selection policies can treat
// it differently from the rest of the network. Biases inherit the tag of
// the layer that owns them.
enum class LayerTag : std::uint8_t { InputProjection = 0, Deep = 1 };

struct ParamTensor {
  std::string name;
  LayerTag tag = LayerTag::Deep;
  Tensor value;
  std::size_t trailing_dim = 1;  // second shape entry for matrices, 1 for vectors
};

struct ModelArch {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t message_layers = 0;  // K
  std::size_t num_classes = 0;
};

// SAGE-style GNN: input projection, K mean-aggregation message-passing
// layers with separate self/neighbor weights, and a linear classifier head.
// Parameter order is fixed: input.{weight,bias}, sage<k>.{self,nbr,bias}
// for k = 1..K, head.{weight,bias}.
struct GnnModel {
  ModelArch arch;
  std::vector<ParamTensor> params;

  static std::size_t param_tensor_count(std::size_t K) { return 3 * K + 4; }
  std::size_t input_weight_idx() const { return 0; }
  std::size_t input_bias_idx() const { return 1; }
  std::size_t self_weight_idx(std::size_t k) const { return 2 + 3 * (k - 1); }
  std::size_t nbr_weight_idx(std::size_t k) const { return 3 + 3 * (k - 1); }
  std::size_t layer_bias_idx(std::size_t k) const { return 4 + 3 * (k - 1); }
  std::size_t head_weight_idx() const { return 2 + 3 * arch.message_layers; }
  std::size_t head_bias_idx() const { return 3 + 3 * arch.message_layers; }

  std::size_t param_count() const;
  // FNV-1a over the raw bytes of every parameter in order.
  std::uint64_t checksum() const;
};

// Shape-congruent with a model's parameter list.
struct GradBundle {
  std::vector<Tensor> tensors;

  static GradBundle like(const GnnModel& model);
  void zero();
};

// Cached forward pass: pre-activations, activations and neighbor means per
// layer plus the final logits.
struct ForwardTrace {
  std::vector<Tensor> pre;       // K+1 entries, n x hidden
  std::vector<Tensor> act;       // K+1 entries, n x hidden
  std::vector<Tensor> nbr_mean;  // K entries; [k-1] feeds message layer k
  Tensor logits;                 // n x C
};

// Glorot-uniform weights, zero biases, tags assigned by layer role.
GnnModel init_model(Rng& rng, std::size_t input_dim, std::size_t hidden_dim,
                    std::size_t message_layers, std::size_t num_classes);

ForwardTrace forward_trace(const GnnModel& model, const MultimodalGraph& g);
Tensor forward(const GnnModel& model, const MultimodalGraph& g);  // logits
Tensor posteriors(const GnnModel& model, const MultimodalGraph& g);  // softmax rows

// Mean cross-entropy over `nodes` and its analytic gradient.
std::pair<double, GradBundle> loss_and_grad(const GnnModel& model, const MultimodalGraph& g,
                                            std::span<const NodeId> nodes);

// Average of element-wise squared single-node loss gradients; each node
// gets its own backward pass and accumulation runs in ascending node order.
GradBundle per_node_sq_grad(const GnnModel& model, const MultimodalGraph& g,
                            std::span<const NodeId> nodes);

// Same average for several node sets in one sweep: each node of the union
// is backpropagated once and its squared gradient added to every owning
// set's accumulator, still in ascending node order per set. Empty sets
// yield an all-zero bundle.
std::vector<GradBundle> per_node_sq_grad_multi(const GnnModel& model, const MultimodalGraph& g,
                                               const std::vector<std::vector<NodeId>>& sets);

struct TrainConfig {
  std::size_t epochs = 200;
  double lr = 1e-2;
};

struct TrainResult {
  GnnModel model;
  std::vector<double> loss_trace;
};

// Full-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on mean cross-entropy
// over the training mask.
TrainResult train(GnnModel model, const MultimodalGraph& g, const TrainConfig& cfg);

// Model checkpoint container, magic "FDQM". Round-trips bit-exactly.
void save_model(const GnnModel& model, const std::string& path);
GnnModel load_model(const std::string& path);

}  // namespace fdq
