#include "fdq/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fdq/binio.hpp"

namespace fdq {

namespace {

// Dot product with four independent accumulators. Fixed evaluation order,
// so results are reproducible run to run.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + s2) + s3;
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// out = A * W^T + bias, where A is n x p and W is q x p.
Tensor linear(const Tensor& a, const Tensor& w, const Tensor& bias) {
  const std::size_t n = a.rows(), p = a.cols(), q = w.rows();
  Tensor out({n, q});
  for (std::size_t v = 0; v < n; ++v) {
    const double* arow = a.row(v);
    double* orow = out.row(v);
    for (std::size_t j = 0; j < q; ++j) orow[j] = dot(arow, w.row(j), p) + bias[j];
  }
  return out;
}

// Mean of h rows over each node's neighborhood; empty neighborhoods give
// the zero vector.
Tensor neighbor_mean(const MultimodalGraph& g, const Tensor& h) {
  const std::size_t dim = h.cols();
  Tensor out({g.n, dim});
  for (NodeId v = 0; v < g.n; ++v) {
    auto nb = g.neighbors(v);
    if (nb.empty()) continue;
    double* orow = out.row(v);
    for (NodeId u : nb) axpy(orow, 1.0, h.row(u), dim);
    const double inv = 1.0 / static_cast<double>(nb.size());
    for (std::size_t j = 0; j < dim; ++j) orow[j] *= inv;
  }
  return out;
}

// Cross-entropy of one logit row and, if dl is non-null, softmax - onehot.
double node_ce(const double* logits, std::uint32_t label, std::size_t C, double* dl) {
  double mx = logits[0];
  for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, logits[c]);
  double z = 0.0;
  for (std::size_t c = 0; c < C; ++c) z += std::exp(logits[c] - mx);
  const double logz = std::log(z) + mx;
  if (dl != nullptr) {
    for (std::size_t c = 0; c < C; ++c) dl[c] = std::exp(logits[c] - logz);
    dl[label] -= 1.0;
  }
  return logz - logits[label];
}

std::vector<NodeId> sorted_nodes(const MultimodalGraph& g, std::span<const NodeId> nodes,
                                 const char* op) {
  if (nodes.empty()) throw ValueError(std::string(op) + ": empty node set");
  std::vector<NodeId> out(nodes.begin(), nodes.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.back() >= g.n) throw IndexError(std::string(op) + ": node id out of range");
  return out;
}

// Reverse pass seeded at a set of logit rows. Gradients flow only through
// the receptive field of the seeds, which keeps single-node backward
// passes cheap on large graphs.
class BackwardEngine {
 public:
  BackwardEngine(const GnnModel& model, const MultimodalGraph& g, const ForwardTrace& trace)
      : model_(model),
        g_(g),
        trace_(trace),
        buf_a_({g.n, model.arch.hidden_dim}),
        buf_b_({g.n, model.arch.hidden_dim}),
        mark_(g.n, 0),
        dz_(model.arch.hidden_dim, 0.0),
        tvec_(model.arch.hidden_dim, 0.0),
        inv_deg_(g.n, 0.0) {
    for (NodeId v = 0; v < g.n; ++v) {
      const std::size_t deg = g.degree(v);
      if (deg > 0) inv_deg_[v] = 1.0 / static_cast<double>(deg);
    }
  }

  // seeds must be sorted unique; dlogits holds one C-row per seed; out must
  // be zero-filled and shape-congruent with the model.
  void run(std::span<const NodeId> seeds, const double* dlogits, GradBundle& out) {
    const std::size_t H = model_.arch.hidden_dim;
    const std::size_t C = model_.arch.num_classes;
    const std::size_t K = model_.arch.message_layers;

    Tensor* cur = &buf_a_;
    Tensor* prev = &buf_b_;

    // Classifier head.
    const Tensor& w_head = model_.params[model_.head_weight_idx()].value;
    Tensor& d_w_head = out.tensors[model_.head_weight_idx()];
    Tensor& d_b_head = out.tensors[model_.head_bias_idx()];
    active_.assign(seeds.begin(), seeds.end());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const NodeId v = seeds[i];
      const double* dl = dlogits + i * C;
      const double* hk = trace_.act[K].row(v);
      double* dhv = cur->row(v);
      for (std::size_t c = 0; c < C; ++c) {
        const double w = dl[c];
        d_b_head[c] += w;
        if (w != 0.0) {
          axpy(d_w_head.row(c), w, hk, H);
          axpy(dhv, w, w_head.row(c), H);
        }
      }
    }

    // Message-passing layers, deepest first.
    for (std::size_t k = K; k >= 1; --k) {
      const Tensor& w_self = model_.params[model_.self_weight_idx(k)].value;
      const Tensor& w_nbr = model_.params[model_.nbr_weight_idx(k)].value;
      Tensor& d_w_self = out.tensors[model_.self_weight_idx(k)];
      Tensor& d_w_nbr = out.tensors[model_.nbr_weight_idx(k)];
      Tensor& d_bias = out.tensors[model_.layer_bias_idx(k)];

      next_active_.clear();
      for (NodeId v : active_) {
        mark_[v] = 1;
        next_active_.push_back(v);
      }
      for (NodeId v : active_) {
        const double* pre = trace_.pre[k].row(v);
        double* dhv = cur->row(v);
        bool any = false;
        for (std::size_t j = 0; j < H; ++j) {
          dz_[j] = pre[j] > 0.0 ? dhv[j] : 0.0;
          if (dz_[j] != 0.0) any = true;
          dhv[j] = 0.0;
        }
        if (!any) continue;

        const double* h_in = trace_.act[k - 1].row(v);
        const double* m_in = trace_.nbr_mean[k - 1].row(v);
        double* dpv = prev->row(v);
        std::fill(tvec_.begin(), tvec_.end(), 0.0);
        for (std::size_t j = 0; j < H; ++j) {
          const double w = dz_[j];
          if (w == 0.0) continue;
          d_bias[j] += w;
          axpy(d_w_self.row(j), w, h_in, H);
          axpy(d_w_nbr.row(j), w, m_in, H);
          axpy(dpv, w, w_self.row(j), H);
          axpy(tvec_.data(), w, w_nbr.row(j), H);
        }
        const auto nb = g_.neighbors(v);
        if (!nb.empty()) {
          const double inv = inv_deg_[v];
          for (NodeId u : nb) {
            axpy(prev->row(u), inv, tvec_.data(), H);
            if (!mark_[u]) {
              mark_[u] = 1;
              next_active_.push_back(u);
            }
          }
        }
      }
      std::sort(next_active_.begin(), next_active_.end());
      for (NodeId v : next_active_) mark_[v] = 0;
      active_.swap(next_active_);
      std::swap(cur, prev);
    }

    // Input projection.
    const std::size_t D = model_.arch.input_dim;
    Tensor& d_w_in = out.tensors[model_.input_weight_idx()];
    Tensor& d_b_in = out.tensors[model_.input_bias_idx()];
    for (NodeId u : active_) {
      const double* pre = trace_.pre[0].row(u);
      double* dhu = cur->row(u);
      const double* x = g_.features.row(u);
      for (std::size_t j = 0; j < H; ++j) {
        const double w = pre[j] > 0.0 ? dhu[j] : 0.0;
        dhu[j] = 0.0;
        if (w == 0.0) continue;
        d_b_in[j] += w;
        axpy(d_w_in.row(j), w, x, D);
      }
    }
    active_.clear();
  }

 private:
  const GnnModel& model_;
  const MultimodalGraph& g_;
  const ForwardTrace& trace_;
  Tensor buf_a_, buf_b_;
  std::vector<NodeId> active_, next_active_;
  std::vector<std::uint8_t> mark_;
  std::vector<double> dz_, tvec_;
  std::vector<double> inv_deg_;
};

}  // namespace

std::size_t GnnModel::param_count() const {
  std::size_t total = 0;
  for (const auto& p : params) total += p.value.size();
  return total;
}

std::uint64_t GnnModel::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params) {
    for (double x : p.value.data) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof(bits));
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

GradBundle GradBundle::like(const GnnModel& model) {
  GradBundle b;
  b.tensors.reserve(model.params.size());
  for (const auto& p : model.params) b.tensors.emplace_back(p.value.shape);
  return b;
}

void GradBundle::zero() {
  for (auto& t : tensors) t.zero();
}

GnnModel init_model(Rng& rng, std::size_t input_dim, std::size_t hidden_dim,
                    std::size_t message_layers, std::size_t num_classes) {
  if (input_dim < 1 || hidden_dim < 1 || message_layers < 1 || num_classes < 1) {
    throw ValueError("init_model: all dimensions must be >= 1");
  }
  GnnModel m;
  m.arch = {input_dim, hidden_dim, message_layers, num_classes};

  auto glorot = [&rng](Tensor& t, std::size_t fan_in, std::size_t fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& x : t.data) x = rng.uniform(-s, s);
  };
  auto push = [&m](std::string name, LayerTag tag, Tensor value) {
    const std::size_t trailing = value.shape.size() >= 2 ? value.shape[1] : 1;
    m.params.push_back({std::move(name), tag, std::move(value), trailing});
  };

  Tensor w_in({hidden_dim, input_dim});
  glorot(w_in, input_dim, hidden_dim);
  push("input.weight", LayerTag::InputProjection, std::move(w_in));
  push("input.bias", LayerTag::InputProjection, Tensor({hidden_dim}));

  for (std::size_t k = 1; k <= message_layers; ++k) {
    Tensor w_self({hidden_dim, hidden_dim});
    Tensor w_nbr({hidden_dim, hidden_dim});
    glorot(w_self, hidden_dim, hidden_dim);
    glorot(w_nbr, hidden_dim, hidden_dim);
    const std::string base = "sage" + std::to_string(k);
    push(base + ".self", LayerTag::Deep, std::move(w_self));
    push(base + ".nbr", LayerTag::Deep, std::move(w_nbr));
    push(base + ".bias", LayerTag::Deep, Tensor({hidden_dim}));
  }

  Tensor w_head({num_classes, hidden_dim});
  glorot(w_head, hidden_dim, num_classes);
  push("head.weight", LayerTag::Deep, std::move(w_head));
  push("head.bias", LayerTag::Deep, Tensor({num_classes}));
  return m;
}

ForwardTrace forward_trace(const GnnModel& model, const MultimodalGraph& g) {
  if (g.d != model.arch.input_dim) {
    throw DimensionError("forward: graph feature dimension does not match model input_dim");
  }
  const std::size_t K = model.arch.message_layers;
  const std::size_t H = model.arch.hidden_dim;

  ForwardTrace t;
  t.pre.reserve(K + 1);
  t.act.reserve(K + 1);
  t.nbr_mean.reserve(K);

  t.pre.push_back(linear(g.features, model.params[model.input_weight_idx()].value,
                         model.params[model.input_bias_idx()].value));
  t.act.push_back(relu(t.pre[0]));

  for (std::size_t k = 1; k <= K; ++k) {
    const Tensor& w_self = model.params[model.self_weight_idx(k)].value;
    const Tensor& w_nbr = model.params[model.nbr_weight_idx(k)].value;
    const Tensor& bias = model.params[model.layer_bias_idx(k)].value;
    t.nbr_mean.push_back(neighbor_mean(g, t.act[k - 1]));

    const Tensor& h_in = t.act[k - 1];
    const Tensor& m_in = t.nbr_mean[k - 1];
    Tensor pre({g.n, H});
    for (NodeId v = 0; v < g.n; ++v) {
      const double* hrow = h_in.row(v);
      const double* mrow = m_in.row(v);
      double* orow = pre.row(v);
      for (std::size_t j = 0; j < H; ++j) {
        orow[j] = dot(hrow, w_self.row(j), H) + dot(mrow, w_nbr.row(j), H) + bias[j];
      }
    }
    t.pre.push_back(std::move(pre));
    t.act.push_back(relu(t.pre[k]));
  }

  t.logits = linear(t.act[K], model.params[model.head_weight_idx()].value,
                    model.params[model.head_bias_idx()].value);
  return t;
}

Tensor forward(const GnnModel& model, const MultimodalGraph& g) {
  return std::move(forward_trace(model, g).logits);
}

Tensor posteriors(const GnnModel& model, const MultimodalGraph& g) {
  Tensor logits = forward(model, g);
  const std::size_t C = logits.cols();
  for (std::size_t v = 0; v < logits.rows(); ++v) {
    double* row = logits.row(v);
    double mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      row[c] = std::exp(row[c] - mx);
      z += row[c];
    }
    const double inv = 1.0 / z;
    for (std::size_t c = 0; c < C; ++c) row[c] *= inv;
  }
  return logits;
}

std::pair<double, GradBundle> loss_and_grad(const GnnModel& model, const MultimodalGraph& g,
                                            std::span<const NodeId> nodes) {
  const std::vector<NodeId> set = sorted_nodes(g, nodes, "loss_and_grad");
  const std::size_t C = model.arch.num_classes;
  const ForwardTrace trace = forward_trace(model, g);

  const double inv = 1.0 / static_cast<double>(set.size());
  std::vector<double> dlogits(set.size() * C, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const NodeId v = set[i];
    double* dl = dlogits.data() + i * C;
    loss += node_ce(trace.logits.row(v), g.labels[v], C, dl);
    for (std::size_t c = 0; c < C; ++c) dl[c] *= inv;
  }
  loss *= inv;

  GradBundle grads = GradBundle::like(model);
  BackwardEngine engine(model, g, trace);
  engine.run(set, dlogits.data(), grads);
  return {loss, std::move(grads)};
}

GradBundle per_node_sq_grad(const GnnModel& model, const MultimodalGraph& g,
                            std::span<const NodeId> nodes) {
  if (nodes.empty()) throw ValueError("per_node_sq_grad: empty node set");
  std::vector<std::vector<NodeId>> sets(1);
  sets[0].assign(nodes.begin(), nodes.end());
  return std::move(per_node_sq_grad_multi(model, g, sets)[0]);
}

std::vector<GradBundle> per_node_sq_grad_multi(const GnnModel& model, const MultimodalGraph& g,
                                               const std::vector<std::vector<NodeId>>& sets) {
  const std::size_t C = model.arch.num_classes;

  std::vector<std::vector<std::uint8_t>> member(sets.size());
  std::vector<std::size_t> counts(sets.size(), 0);
  std::vector<NodeId> unionset;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    member[s].assign(g.n, 0);
    for (NodeId v : sets[s]) {
      if (v >= g.n) throw IndexError("per_node_sq_grad: node id out of range");
      if (!member[s][v]) {
        member[s][v] = 1;
        ++counts[s];
        unionset.push_back(v);
      }
    }
  }
  std::sort(unionset.begin(), unionset.end());
  unionset.erase(std::unique(unionset.begin(), unionset.end()), unionset.end());

  std::vector<GradBundle> acc;
  acc.reserve(sets.size());
  for (std::size_t s = 0; s < sets.size(); ++s) acc.push_back(GradBundle::like(model));
  if (unionset.empty()) return acc;

  const ForwardTrace trace = forward_trace(model, g);
  GradBundle grad = GradBundle::like(model);
  BackwardEngine engine(model, g, trace);
  std::vector<double> dl(C, 0.0);

  for (const NodeId v : unionset) {
    node_ce(trace.logits.row(v), g.labels[v], C, dl.data());
    engine.run({&v, 1}, dl.data(), grad);
    for (std::size_t t = 0; t < grad.tensors.size(); ++t) {
      double* gbuf = grad.tensors[t].data.data();
      const std::size_t len = grad.tensors[t].size();
      for (std::size_t s = 0; s < sets.size(); ++s) {
        if (!member[s][v]) continue;
        double* a = acc[s].tensors[t].data.data();
        for (std::size_t i = 0; i < len; ++i) a[i] += gbuf[i] * gbuf[i];
      }
      for (std::size_t i = 0; i < len; ++i) gbuf[i] = 0.0;
    }
  }
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (counts[s] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[s]);
    for (auto& t : acc[s].tensors) {
      for (auto& x : t.data) x *= inv;
    }
  }
  return acc;
}

TrainResult train(GnnModel model, const MultimodalGraph& g, const TrainConfig& cfg) {
  const std::vector<NodeId> nodes = g.train_nodes();
  if (nodes.empty()) throw ValueError("train: empty training mask");

  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  GradBundle m1 = GradBundle::like(model);
  GradBundle m2 = GradBundle::like(model);
  std::vector<double> trace;
  trace.reserve(cfg.epochs);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto [loss, grads] = loss_and_grad(model, g, nodes);
    if (!std::isfinite(loss)) throw DivergenceError(epoch);
    trace.push_back(loss);

    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
    for (std::size_t t = 0; t < model.params.size(); ++t) {
      double* theta = model.params[t].value.data.data();
      const double* gr = grads.tensors[t].data.data();
      double* mo = m1.tensors[t].data.data();
      double* ve = m2.tensors[t].data.data();
      const std::size_t len = model.params[t].value.size();
      for (std::size_t i = 0; i < len; ++i) {
        mo[i] = beta1 * mo[i] + (1.0 - beta1) * gr[i];
        ve[i] = beta2 * ve[i] + (1.0 - beta2) * gr[i] * gr[i];
        theta[i] -= cfg.lr * (mo[i] / c1) / (std::sqrt(ve[i] / c2) + adam_eps);
      }
    }
  }
  return {std::move(model), std::move(trace)};
}

void save_model(const GnnModel& model, const std::string& path) {
  BinWriter w(path);
  w.magic("FDQM");
  w.u32(1);
  w.u64(model.arch.input_dim);
  w.u64(model.arch.hidden_dim);
  w.u64(model.arch.message_layers);
  w.u64(model.arch.num_classes);
  for (const auto& p : model.params) {
    w.str(p.name);
    w.u8(static_cast<std::uint8_t>(p.tag));
    w.u32(static_cast<std::uint32_t>(p.value.shape.size()));
    for (std::size_t s : p.value.shape) w.u64(s);
    for (double x : p.value.data) w.f64(x);
  }
  w.close();
}

GnnModel load_model(const std::string& path) {
  BinReader r(path);
  r.expect_magic("FDQM");
  const std::uint32_t version = r.u32();
  if (version != 1) throw FormatError("unsupported model container version", r.offset() - 4);

  GnnModel m;
  m.arch.input_dim = r.u64();
  m.arch.hidden_dim = r.u64();
  m.arch.message_layers = r.u64();
  m.arch.num_classes = r.u64();
  if (m.arch.input_dim < 1 || m.arch.hidden_dim < 1 || m.arch.message_layers < 1 ||
      m.arch.num_classes < 1) {
    throw FormatError("invalid model architecture fields", r.offset());
  }

  const std::size_t count = GnnModel::param_tensor_count(m.arch.message_layers);
  m.params.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ParamTensor p;
    p.name = r.str();
    const std::uint8_t tag = r.u8();
    if (tag > 1) throw FormatError("invalid layer tag", r.offset() - 1);
    p.tag = static_cast<LayerTag>(tag);
    const std::uint32_t rank = r.u32();
    if (rank < 1 || rank > 2) throw FormatError("invalid parameter rank", r.offset() - 4);
    std::vector<std::size_t> shape(rank);
    for (auto& s : shape) s = r.u64();
    p.value = Tensor(shape);
    for (auto& x : p.value.data) x = r.f64();
    p.trailing_dim = rank == 2 ? shape[1] : 1;
    m.params.push_back(std::move(p));
  }
  return m;
}

}  // namespace fdq
