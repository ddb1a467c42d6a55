#include "fdq/unlearn.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

namespace fdq {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<TensorDiag> summarize(const SuppressionPlan& plan) {
  std::vector<TensorDiag> out;
  out.reserve(plan.tensors.size());
  for (const auto& t : plan.tensors) {
    TensorDiag d;
    d.tensor = t.tensor;
    d.tag = t.tag;
    d.dim_gate_fired = t.dim_gate_fired;
    d.k_eff = t.k_eff;
    d.t1 = t.t1;
    d.t2 = t.t2;
    d.has_second = t.has_second;
    d.selected = t.indices.size();
    d.numel = t.numel;
    d.zero_threshold_hits = t.zero_threshold_hits;
    if (!t.factors.empty()) {
      double mn = t.factors[0], sum = 0.0;
      for (double f : t.factors) {
        mn = std::min(mn, f);
        sum += f;
      }
      d.min_factor = mn;
      d.mean_factor = sum / static_cast<double>(t.factors.size());
    }
    out.push_back(std::move(d));
  }
  return out;
}

void edited_fractions(const SuppressionPlan& plan, double& input_frac, double& deep_frac) {
  std::size_t input_sel = 0, input_total = 0, deep_sel = 0, deep_total = 0;
  for (const auto& t : plan.tensors) {
    if (t.tag == LayerTag::InputProjection) {
      input_sel += t.indices.size();
      input_total += t.numel;
    } else {
      deep_sel += t.indices.size();
      deep_total += t.numel;
    }
  }
  input_frac = input_total == 0 ? 0.0 : static_cast<double>(input_sel) / static_cast<double>(input_total);
  deep_frac = deep_total == 0 ? 0.0 : static_cast<double>(deep_sel) / static_cast<double>(deep_total);
}

UnlearnReport make_report(const GnnModel& before, const GnnModel& after,
                          const SuppressionPlan& plan, const FdqConfig& cfg, const char* kind,
                          std::size_t forget_size, std::size_t influenced_size, bool nbr_empty,
                          double seconds) {
  UnlearnReport r;
  r.mode = fdq_mode_name(cfg.mode);
  r.kind = kind;
  r.forget_size = forget_size;
  r.influenced_size = influenced_size;
  r.nbr_empty = nbr_empty;
  r.seconds = seconds;
  r.pre_checksum = before.checksum();
  r.post_checksum = after.checksum();
  edited_fractions(plan, r.edited_fraction_input, r.edited_fraction_deep);
  r.tensors = summarize(plan);
  r.plan_table = format_plan_table(plan);
  return r;
}

}  // namespace

Tensor suppression_score_single(const Tensor& train_imp, const Tensor& forget_imp, double eps) {
  return div_eps(train_imp, forget_imp, eps);
}

Tensor suppression_score_pair(const Tensor& train_imp, const Tensor& forget_imp,
                              const Tensor& nbr_imp, double eps) {
  return div_eps(square(train_imp), mul(forget_imp, nbr_imp), eps);
}

UnlearnOutcome unlearn_nodes(const GnnModel& model, const MultimodalGraph& g,
                             std::span<const NodeId> forget, const FdqConfig& cfg) {
  cfg.validate();
  if (forget.empty()) throw ValueError("unlearn_nodes: empty forget set");
  std::vector<NodeId> forget_sorted(forget.begin(), forget.end());
  std::sort(forget_sorted.begin(), forget_sorted.end());
  forget_sorted.erase(std::unique(forget_sorted.begin(), forget_sorted.end()),
                      forget_sorted.end());
  for (NodeId v : forget_sorted) {
    if (v >= g.n) throw IndexError("unlearn_nodes: node id out of range");
    if (!g.train_mask[v]) {
      throw ValueError("unlearn_nodes: node " + std::to_string(v) + " is not a training node");
    }
  }
  const std::size_t hops = cfg.resolve_hops(model.arch.message_layers);

  const auto t0 = Clock::now();

  std::vector<std::uint8_t> in_forget(g.n, 0);
  for (NodeId v : forget_sorted) in_forget[v] = 1;
  std::vector<NodeId> nbr;
  for (NodeId v : k_hop_neighbors(g, forget_sorted, hops)) {
    if (!in_forget[v]) nbr.push_back(v);
  }

  std::vector<NodeId> train_set;
  for (NodeId v = 0; v < g.n; ++v) {
    if (g.train_mask[v] && !(cfg.fim_on_retain && in_forget[v])) train_set.push_back(v);
  }
  if (train_set.empty()) throw ValueError("unlearn_nodes: training set is empty");

  const FimTriple fims = fim_triple(model, g, train_set, forget_sorted, nbr);

  std::vector<Tensor> score1;
  std::vector<Tensor> score2;
  score1.reserve(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    score1.push_back(suppression_score_single(fims.train.values[i], fims.forget.values[i], cfg.eps));
    if (!fims.nbr_empty) {
      score2.push_back(suppression_score_pair(fims.train.values[i], fims.forget.values[i],
                                              fims.nbr.values[i], cfg.eps));
    }
  }
  const SuppressionPlan plan =
      build_plan(model, score1, fims.nbr_empty ? nullptr : &score2, cfg);
  GnnModel edited = apply_plan(model, plan);

  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  UnlearnReport report = make_report(model, edited, plan, cfg, "node", forget_sorted.size(),
                                     nbr.size(), fims.nbr_empty, seconds);
  return {std::move(edited), remove(g, ForgetRequest::for_nodes(forget_sorted)), plan,
          std::move(report)};
}

UnlearnOutcome unlearn_edges(const GnnModel& model, const MultimodalGraph& g,
                             const std::vector<Edge>& forget, const FdqConfig& cfg) {
  cfg.validate();
  if (forget.empty()) throw ValueError("unlearn_edges: empty forget set");
  const ForgetRequest req = ForgetRequest::for_edges(forget);
  for (const auto& [u, v] : req.edges) {
    if (!g.has_edge(u, v)) {
      throw NotFoundError("unlearn_edges: edge (" + std::to_string(u) + ", " +
                          std::to_string(v) + ") does not exist");
    }
  }
  const std::size_t hops = cfg.resolve_hops(model.arch.message_layers);

  const auto t0 = Clock::now();

  std::vector<NodeId> endpoints;
  for (const auto& [u, v] : req.edges) {
    endpoints.push_back(u);
    endpoints.push_back(v);
  }
  std::sort(endpoints.begin(), endpoints.end());
  endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());

  // Influenced set: endpoints plus their hop neighborhood, restricted to
  // labeled training nodes (importance needs labels).
  std::vector<NodeId> influenced;
  for (NodeId v : k_hop_neighbors(g, endpoints, hops)) {
    if (g.train_mask[v]) influenced.push_back(v);
  }
  if (influenced.empty()) {
    throw ValueError("unlearn_edges: influenced set contains no training nodes");
  }

  const std::vector<NodeId> train_set = g.train_nodes();
  if (train_set.empty()) throw ValueError("unlearn_edges: training set is empty");

  const FimTriple fims = fim_triple(model, g, train_set, influenced, {});

  std::vector<Tensor> score;
  score.reserve(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    score.push_back(suppression_score_single(fims.train.values[i], fims.forget.values[i], cfg.eps));
  }
  const SuppressionPlan plan = build_plan(model, score, nullptr, cfg);
  GnnModel edited = apply_plan(model, plan);

  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  UnlearnReport report = make_report(model, edited, plan, cfg, "edge", req.edges.size(),
                                     influenced.size(), true, seconds);
  return {std::move(edited), remove(g, req), plan, std::move(report)};
}

UnlearnOutcome run_unlearning(const GnnModel& model, const MultimodalGraph& g,
                              const ForgetRequest& req, const FdqConfig& cfg) {
  if (req.kind == RequestKind::NodeUnlearn) return unlearn_nodes(model, g, req.node_ids, cfg);
  return unlearn_edges(model, g, req.edges, cfg);
}

UnlearnOutcome run_ablation(const GnnModel& model, const MultimodalGraph& g,
                            const ForgetRequest& req, FdqConfig cfg, FdqMode mode) {
  if (mode != FdqMode::NoFD && mode != FdqMode::NoQtl) {
    throw ValueError("run_ablation: mode must be nofd or noqtl");
  }
  cfg.mode = mode;
  return run_unlearning(model, g, req, cfg);
}

OracleResult retrain_oracle(const MultimodalGraph& g, const ForgetRequest& req,
                            const ModelArch& arch, const TrainConfig& tcfg, std::uint64_t seed) {
  MultimodalGraph retained = remove(g, req);
  Rng rng(seed);
  GnnModel model = init_model(rng, arch.input_dim, arch.hidden_dim, arch.message_layers,
                              arch.num_classes);
  TrainResult trained = train(std::move(model), retained, tcfg);
  return {std::move(trained.model), std::move(retained), std::move(trained.loss_trace)};
}

std::string UnlearnReport::to_kv() const {
  char buf[256];
  std::string out;
  out += "mode = " + mode + "\n";
  out += "kind = " + kind + "\n";
  out += "forget_size = " + std::to_string(forget_size) + "\n";
  out += "influenced_size = " + std::to_string(influenced_size) + "\n";
  out += std::string("nbr_empty = ") + (nbr_empty ? "true" : "false") + "\n";
  std::snprintf(buf, sizeof(buf), "seconds = %.6f\n", seconds);
  out += buf;
  std::snprintf(buf, sizeof(buf), "pre_checksum = %016llx\n",
                static_cast<unsigned long long>(pre_checksum));
  out += buf;
  std::snprintf(buf, sizeof(buf), "post_checksum = %016llx\n",
                static_cast<unsigned long long>(post_checksum));
  out += buf;
  std::snprintf(buf, sizeof(buf), "edited_fraction_input = %.9f\n", edited_fraction_input);
  out += buf;
  std::snprintf(buf, sizeof(buf), "edited_fraction_deep = %.9f\n", edited_fraction_deep);
  out += buf;
  return out;
}

std::string UnlearnReport::csv_header() {
  return "mode,kind,df_size,dnbr_size,seconds,edited_fraction_input,edited_fraction_deep";
}

std::string UnlearnReport::to_csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%zu,%.6f,%.9f,%.9f", mode.c_str(), kind.c_str(),
                forget_size, influenced_size, seconds, edited_fraction_input,
                edited_fraction_deep);
  return buf;
}

}  // namespace fdq
