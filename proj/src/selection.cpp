#include "fdq/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fdq {

void FdqConfig::validate() const {
  if (!(k > 0.0 && k <= 1.0)) throw ValueError("fdq.k: must be in (0, 1]");
  if (!(rho > 0.0 && rho <= 1.0)) throw ValueError("fdq.rho: must be in (0, 1]");
  if (!(k_min > 0.0 && k_min <= k)) throw ValueError("fdq.k_min: must be in (0, k]");
  if (!(gamma >= 1.0)) throw ValueError("fdq.gamma: must be >= 1");
  if (!(eps > 0.0)) throw ValueError("fdq.eps: must be positive");
  if (tau < 1) throw ValueError("fdq.tau: must be >= 1");
}

const char* fdq_mode_name(FdqMode mode) {
  switch (mode) {
    case FdqMode::Full: return "full";
    case FdqMode::NoFD: return "nofd";
    case FdqMode::NoQtl: return "noqtl";
  }
  return "full";
}

std::optional<FdqMode> fdq_mode_from_name(const std::string& name) {
  if (name == "full") return FdqMode::Full;
  if (name == "nofd") return FdqMode::NoFD;
  if (name == "noqtl") return FdqMode::NoQtl;
  return std::nullopt;
}

double alpha(const ParamTensor& tensor, std::size_t d, const FdqConfig& cfg) {
  if (cfg.mode == FdqMode::NoFD) return 1.0;
  if (tensor.tag == LayerTag::InputProjection && d >= cfg.tau) {
    return std::max(cfg.rho, cfg.k_min / cfg.k);
  }
  return 1.0;
}

double k_eff(const ParamTensor& tensor, std::size_t d, const FdqConfig& cfg) {
  return alpha(tensor, d, cfg) * cfg.k;
}

SelectionResult select(const std::vector<double>& score1, const std::vector<double>* score2,
                       double k_eff_value) {
  if (score1.empty()) throw ValueError("select: empty score array");
  if (score2 != nullptr && score2->size() != score1.size()) {
    throw DimensionError("select: criterion score arrays differ in length");
  }
  SelectionResult r;
  r.t1 = quantile(score1, k_eff_value);
  r.has_second = score2 != nullptr;
  if (r.has_second) r.t2 = quantile(*score2, k_eff_value);

  for (std::size_t p = 0; p < score1.size(); ++p) {
    const bool first = score1[p] <= r.t1;
    const bool second = r.has_second && (*score2)[p] <= r.t2;
    if (!first && !second) continue;
    r.indices.push_back(p);
    if (first) {
      r.scores.push_back(score1[p]);
      r.thresholds.push_back(r.t1);
    } else {
      r.scores.push_back((*score2)[p]);
      r.thresholds.push_back(r.t2);
    }
  }
  return r;
}

double dampening(double score, double threshold, double gamma) {
  if (threshold == 0.0) return score == 0.0 ? 0.0 : 1.0;
  return std::min(score / threshold, gamma);
}

std::size_t SuppressionPlan::selected_total() const {
  std::size_t total = 0;
  for (const auto& t : tensors) total += t.indices.size();
  return total;
}

bool SuppressionPlan::operator==(const SuppressionPlan& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& a = tensors[i];
    const auto& b = other.tensors[i];
    if (a.tensor != b.tensor || a.indices != b.indices || a.factors != b.factors) return false;
  }
  return true;
}

namespace {

TensorPlan plan_for_tensor(const ParamTensor& param, const std::vector<double>& s1,
                           const std::vector<double>* s2, const FdqConfig& cfg, std::size_t d) {
  TensorPlan tp;
  tp.tensor = param.name;
  tp.tag = param.tag;
  tp.numel = param.value.size();

  if (cfg.mode == FdqMode::NoQtl) {
    // Ratio-threshold selection: keep anything whose score stays below the
    // maximum scaling factor, dampened by score/gamma capped at 1.
    tp.t1 = cfg.gamma;
    tp.has_second = s2 != nullptr;
    tp.t2 = tp.has_second ? cfg.gamma : 0.0;
    for (std::size_t p = 0; p < s1.size(); ++p) {
      const bool first = s1[p] <= cfg.gamma;
      const bool second = s2 != nullptr && (*s2)[p] <= cfg.gamma;
      if (!first && !second) continue;
      const double score = first ? s1[p] : (*s2)[p];
      tp.indices.push_back(p);
      tp.factors.push_back(std::min(score / cfg.gamma, 1.0));
    }
    return tp;
  }

  tp.dim_gate_fired =
      cfg.mode == FdqMode::Full && param.tag == LayerTag::InputProjection && d >= cfg.tau;
  tp.k_eff = k_eff(param, d, cfg);
  SelectionResult sel = select(s1, s2, tp.k_eff);
  tp.t1 = sel.t1;
  tp.t2 = sel.t2;
  tp.has_second = sel.has_second;
  tp.indices = std::move(sel.indices);
  tp.factors.reserve(tp.indices.size());
  for (std::size_t i = 0; i < tp.indices.size(); ++i) {
    const double b = sel.scores[i];
    const double t = sel.thresholds[i];
    if (t == 0.0) ++tp.zero_threshold_hits;
    tp.factors.push_back(dampening(b, t, cfg.gamma));
  }
  return tp;
}

}  // namespace

SuppressionPlan build_plan(const GnnModel& model, const std::vector<Tensor>& score1,
                           const std::vector<Tensor>* score2, const FdqConfig& cfg) {
  cfg.validate();
  if (score1.size() != model.params.size() ||
      (score2 != nullptr && score2->size() != model.params.size())) {
    throw DimensionError("build_plan: scores are not congruent with the model");
  }
  SuppressionPlan plan;
  plan.tensors.reserve(model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const ParamTensor& param = model.params[i];
    if (!score1[i].same_shape(param.value)) {
      throw DimensionError("build_plan: score shape mismatch at '" + param.name + "'");
    }
    if (!cfg.edit_biases && param.value.shape.size() < 2) {
      TensorPlan skip;
      skip.tensor = param.name;
      skip.tag = param.tag;
      skip.numel = param.value.size();
      plan.tensors.push_back(std::move(skip));
      continue;
    }
    const std::vector<double>* s2 = score2 != nullptr ? &(*score2)[i].data : nullptr;
    plan.tensors.push_back(
        plan_for_tensor(param, score1[i].data, s2, cfg, model.arch.input_dim));
  }
  return plan;
}

GnnModel apply_plan(const GnnModel& model, const SuppressionPlan& plan) {
  if (plan.tensors.size() != model.params.size()) {
    throw DimensionError("apply_plan: plan is not congruent with the model");
  }
  GnnModel out = model;
  for (std::size_t i = 0; i < plan.tensors.size(); ++i) {
    const TensorPlan& tp = plan.tensors[i];
    Tensor& value = out.params[i].value;
    if (tp.indices.size() != tp.factors.size()) {
      throw DimensionError("apply_plan: index/factor length mismatch at '" + tp.tensor + "'");
    }
    for (std::size_t j = 0; j < tp.indices.size(); ++j) {
      const std::size_t p = tp.indices[j];
      if (p >= value.size()) {
        throw IndexError("apply_plan: index out of range at '" + tp.tensor + "'");
      }
      value[p] *= tp.factors[j];
    }
  }
  return out;
}

double param_ratio(const GnnModel& model) {
  std::size_t input = 0, total = 0;
  for (const auto& p : model.params) {
    total += p.value.size();
    if (p.tag == LayerTag::InputProjection) input += p.value.size();
  }
  if (total == 0) return 0.0;
  return static_cast<double>(input) / static_cast<double>(total);
}

std::string format_plan_table(const SuppressionPlan& plan) {
  std::string out =
      "tensor            tag    gate  k_eff   selected/total      min_factor  mean_factor\n";
  char line[160];
  for (const auto& t : plan.tensors) {
    double mn = 1.0, sum = 0.0;
    for (double f : t.factors) {
      mn = std::min(mn, f);
      sum += f;
    }
    const double mean = t.factors.empty() ? 1.0 : sum / static_cast<double>(t.factors.size());
    std::snprintf(line, sizeof(line), "%-17s %-6s %-5s %.4f  %8zu/%-9zu  %10.4f  %11.4f\n",
                  t.tensor.c_str(), t.tag == LayerTag::InputProjection ? "input" : "deep",
                  t.dim_gate_fired ? "yes" : "no", t.k_eff, t.indices.size(), t.numel,
                  t.factors.empty() ? 1.0 : mn, mean);
    out += line;
  }
  return out;
}

}  // namespace fdq
