#include "fdq/fim.hpp"

#include <algorithm>

#include "fdq/binio.hpp"

namespace fdq {

DiagFim diag_fim(const GnnModel& model, const MultimodalGraph& g, std::span<const NodeId> nodes) {
  if (nodes.empty()) throw ValueError("diag_fim: empty node set");
  DiagFim fim;
  GradBundle acc = per_node_sq_grad(model, g, nodes);
  fim.values = std::move(acc.tensors);
  std::vector<NodeId> unique(nodes.begin(), nodes.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  fim.source_set_size = unique.size();
  return fim;
}

FimTriple fim_triple(const GnnModel& model, const MultimodalGraph& g,
                     std::span<const NodeId> train_set, std::span<const NodeId> forget_set,
                     std::span<const NodeId> nbr_set) {
  if (train_set.empty()) throw ValueError("fim_triple: empty training set");
  if (forget_set.empty()) throw ValueError("fim_triple: empty forget set");

  std::vector<std::vector<NodeId>> sets(3);
  sets[0].assign(train_set.begin(), train_set.end());
  sets[1].assign(forget_set.begin(), forget_set.end());
  sets[2].assign(nbr_set.begin(), nbr_set.end());

  std::vector<GradBundle> bundles = per_node_sq_grad_multi(model, g, sets);

  FimTriple out;
  out.train.values = std::move(bundles[0].tensors);
  out.train.source_set_size = sets[0].size();
  out.forget.values = std::move(bundles[1].tensors);
  out.forget.source_set_size = sets[1].size();
  out.nbr.values = std::move(bundles[2].tensors);
  out.nbr.source_set_size = sets[2].size();
  out.nbr_empty = nbr_set.empty();
  return out;
}

void save_fim(const DiagFim& fim, const GnnModel& model, const std::string& path) {
  if (fim.values.size() != model.params.size()) {
    throw DimensionError("save_fim: importance values are not congruent with the model");
  }
  BinWriter w(path);
  w.magic("FDQF");
  w.u32(1);
  w.u64(model.arch.input_dim);
  w.u64(model.arch.hidden_dim);
  w.u64(model.arch.message_layers);
  w.u64(model.arch.num_classes);
  for (std::size_t i = 0; i < fim.values.size(); ++i) {
    const auto& p = model.params[i];
    const auto& t = fim.values[i];
    if (!t.same_shape(p.value)) {
      throw DimensionError("save_fim: tensor shape mismatch at '" + p.name + "'");
    }
    w.str(p.name);
    w.u8(static_cast<std::uint8_t>(p.tag));
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t s : t.shape) w.u64(s);
    for (double x : t.data) w.f64(x);
  }
  w.close();
}

std::vector<Tensor> load_fim(const std::string& path) {
  BinReader r(path);
  r.expect_magic("FDQF");
  const std::uint32_t version = r.u32();
  if (version != 1) throw FormatError("unsupported importance container version", r.offset() - 4);

  const std::uint64_t input_dim = r.u64();
  (void)input_dim;
  r.u64();  // hidden_dim
  const std::uint64_t layers = r.u64();
  r.u64();  // num_classes

  const std::size_t count = GnnModel::param_tensor_count(layers);
  std::vector<Tensor> values;
  values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    r.str();
    r.u8();
    const std::uint32_t rank = r.u32();
    if (rank < 1 || rank > 2) throw FormatError("invalid tensor rank", r.offset() - 4);
    std::vector<std::size_t> shape(rank);
    for (auto& s : shape) s = r.u64();
    Tensor t(shape);
    for (auto& x : t.data) x = r.f64();
    values.push_back(std::move(t));
  }
  return values;
}

}  // namespace fdq
