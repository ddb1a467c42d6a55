#include "fdq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fdq {

namespace {

std::vector<std::uint32_t> argmax_rows(const Tensor& logits) {
  std::vector<std::uint32_t> out(logits.rows(), 0);
  const std::size_t C = logits.cols();
  for (std::size_t v = 0; v < logits.rows(); ++v) {
    const double* row = logits.row(v);
    std::uint32_t best = 0;
    for (std::size_t c = 1; c < C; ++c) {
      if (row[c] > row[best]) best = static_cast<std::uint32_t>(c);
    }
    out[v] = best;
  }
  return out;
}

// Sorted-descending posterior row: class identity is discarded, only the
// confidence profile feeds the attacker.
std::vector<double> attack_feature(const Tensor& post, NodeId v) {
  std::vector<double> f(post.row(v), post.row(v) + post.cols());
  std::sort(f.begin(), f.end(), std::greater<double>());
  return f;
}

// Logistic attacker trained by full-batch gradient descent on standardized
// features. Deterministic: fixed iteration count and initialization.
struct LogisticAttack {
  std::vector<double> mean, stdev, w;
  double bias = 0.0;

  void fit(const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
    const std::size_t n = x.size(), dim = x[0].size();
    mean.assign(dim, 0.0);
    stdev.assign(dim, 0.0);
    for (const auto& row : x) {
      for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
    }
    for (std::size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(n);
    for (const auto& row : x) {
      for (std::size_t j = 0; j < dim; ++j) {
        const double c = row[j] - mean[j];
        stdev[j] += c * c;
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      stdev[j] = std::sqrt(stdev[j] / static_cast<double>(n)) + 1e-12;
    }

    w.assign(dim, 0.0);
    bias = 0.0;
    std::vector<double> gw(dim, 0.0);
    const double lr = 0.5;
    for (int iter = 0; iter < 500; ++iter) {
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double z = bias;
        for (std::size_t j = 0; j < dim; ++j) z += w[j] * (x[i][j] - mean[j]) / stdev[j];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double err = p - static_cast<double>(y[i]);
        for (std::size_t j = 0; j < dim; ++j) gw[j] += err * (x[i][j] - mean[j]) / stdev[j];
        gb += err;
      }
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < dim; ++j) w[j] -= lr * gw[j] * inv;
      bias -= lr * gb * inv;
    }
  }

  double score(const std::vector<double>& x) const {
    double z = bias;
    for (std::size_t j = 0; j < x.size(); ++j) z += w[j] * (x[j] - mean[j]) / stdev[j];
    return z;
  }
};

}  // namespace

F1Score f1(const GnnModel& model, const MultimodalGraph& g, std::span<const NodeId> mask_nodes) {
  if (mask_nodes.empty()) throw ValueError("f1: empty evaluation mask");
  const Tensor logits = forward(model, g);
  const std::vector<std::uint32_t> pred = argmax_rows(logits);

  const std::size_t C = model.arch.num_classes;
  std::vector<std::size_t> tp(C, 0), fp(C, 0), fn(C, 0);
  std::size_t correct = 0;
  for (NodeId v : mask_nodes) {
    if (v >= g.n) throw IndexError("f1: node id out of range");
    const std::uint32_t truth = g.labels[v];
    const std::uint32_t guess = pred[v];
    if (truth == guess) {
      ++correct;
      ++tp[truth];
    } else {
      ++fp[guess];
      ++fn[truth];
    }
  }
  F1Score s;
  s.micro = static_cast<double>(correct) / static_cast<double>(mask_nodes.size());
  double macro = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    macro += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / denom;
  }
  s.macro = macro / static_cast<double>(C);
  return s;
}

F1Score f1_on_mask(const GnnModel& model, const MultimodalGraph& g, bool use_test_mask) {
  const std::vector<NodeId> nodes = use_test_mask ? g.test_nodes() : g.train_nodes();
  return f1(model, g, nodes);
}

double auc_from_scores(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) {
    throw ValueError("auc_from_scores: both score pools must be nonempty");
  }
  // Mann-Whitney with midranks for ties.
  std::vector<std::pair<double, int>> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.push_back({s, 1});
  for (double s : negatives) all.push_back({s, 0});
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].second == 1) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

double mia_auc(const GnnModel& model, const MultimodalGraph& g, std::span<const NodeId> forget,
               Rng& rng) {
  if (forget.empty()) throw ValueError("mia_auc: empty forget set");
  std::set<NodeId> forget_set(forget.begin(), forget.end());

  std::vector<NodeId> members;
  for (NodeId v = 0; v < g.n; ++v) {
    if (g.train_mask[v] && !forget_set.count(v)) members.push_back(v);
  }
  std::vector<NodeId> tests = g.test_nodes();
  if (tests.size() < 2) throw ValueError("mia_auc: need at least two test nodes");
  rng.shuffle(tests);
  const std::size_t half = tests.size() / 2;
  std::vector<NodeId> attack_nonmembers(tests.begin(), tests.begin() + half);
  std::vector<NodeId> query_nonmembers(tests.begin() + half, tests.end());

  // Balance the attack training classes by subsampling members.
  rng.shuffle(members);
  if (members.size() > attack_nonmembers.size()) members.resize(attack_nonmembers.size());
  if (members.empty() || attack_nonmembers.empty()) {
    throw ValueError("mia_auc: degenerate single-class attack data");
  }

  const Tensor post = posteriors(model, g);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (NodeId v : members) {
    x.push_back(attack_feature(post, v));
    y.push_back(1);
  }
  for (NodeId v : attack_nonmembers) {
    x.push_back(attack_feature(post, v));
    y.push_back(0);
  }
  LogisticAttack attack;
  attack.fit(x, y);

  std::vector<double> pos, neg;
  for (NodeId v : forget_set) pos.push_back(attack.score(attack_feature(post, v)));
  for (NodeId v : query_nonmembers) neg.push_back(attack.score(attack_feature(post, v)));
  return auc_from_scores(pos, neg);
}

PaScenario make_pa_scenario(const MultimodalGraph& clean, double poison_fraction, Rng& rng) {
  if (poison_fraction < 0.0 || poison_fraction > 0.5) {
    throw ValueError("make_pa_scenario: poison_fraction must be in [0, 0.5]");
  }
  PaScenario s;
  s.poison_fraction = poison_fraction;
  s.clean = clean;

  const std::size_t target = static_cast<std::size_t>(
      std::llround(poison_fraction * static_cast<double>(clean.undirected_edge_count())));
  std::set<Edge> chosen;
  std::size_t attempts = 0;
  const std::size_t max_attempts = 400 * (target + 16);
  while (chosen.size() < target && attempts < max_attempts) {
    ++attempts;
    const NodeId u = static_cast<NodeId>(rng.below(clean.n));
    const NodeId v = static_cast<NodeId>(rng.below(clean.n));
    if (u == v || clean.labels[u] == clean.labels[v]) continue;
    const Edge e = u < v ? Edge{u, v} : Edge{v, u};
    if (clean.has_edge(e.first, e.second)) continue;
    chosen.insert(e);
  }
  if (chosen.size() < target) {
    throw ValueError("make_pa_scenario: could not place the requested poison edges");
  }
  s.injected.assign(chosen.begin(), chosen.end());
  s.poisoned = with_edges_added(clean, s.injected);
  return s;
}

PaResult pa_experiment(const PaScenario& scenario, const ModelArch& arch, const TrainConfig& tcfg,
                       const FdqConfig& cfg, std::uint64_t seed) {
  PaResult r;

  {
    Rng rng(seed);
    GnnModel m = init_model(rng, arch.input_dim, arch.hidden_dim, arch.message_layers,
                            arch.num_classes);
    TrainResult clean = train(std::move(m), scenario.clean, tcfg);
    r.f1_clean = f1_on_mask(clean.model, scenario.clean, true).micro;
  }

  Rng rng(seed);
  GnnModel m = init_model(rng, arch.input_dim, arch.hidden_dim, arch.message_layers,
                          arch.num_classes);
  TrainResult poisoned = train(std::move(m), scenario.poisoned, tcfg);
  r.f1_poisoned = f1_on_mask(poisoned.model, scenario.poisoned, true).micro;

  if (scenario.injected.empty()) {
    r.f1_unlearned = r.f1_poisoned;
    r.f1_oracle = r.f1_clean;
    return r;
  }

  UnlearnOutcome unlearned = unlearn_edges(poisoned.model, scenario.poisoned, scenario.injected, cfg);
  r.f1_unlearned = f1_on_mask(unlearned.model, unlearned.graph, true).micro;

  OracleResult oracle = retrain_oracle(scenario.poisoned, ForgetRequest::for_edges(scenario.injected),
                                       arch, tcfg, seed);
  r.f1_oracle = f1_on_mask(oracle.model, oracle.graph, true).micro;
  return r;
}

}  // namespace fdq
