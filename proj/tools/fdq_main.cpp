#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fdq/eval.hpp"
#include "fdq/run_config.hpp"
#include "fdq/unlearn.hpp"

namespace fs = std::filesystem;
using namespace fdq;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

RunConfig effective_config(const GlobalOpts& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg = RunConfig::from_file(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

fs::path out_path(const GlobalOpts& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing", 0);
  out << text;
  if (!out) throw FormatError("write to '" + path.string() + "' failed", 0);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ForgetRequest request_for_run(const RunConfig& cfg, const MultimodalGraph& g,
                              const std::string& request_path, const GlobalOpts& gopts) {
  if (!request_path.empty()) return ForgetRequest::read_file(request_path);
  Rng rng(cfg.seed);
  ForgetRequest req = cfg.experiment.kind == RequestKind::NodeUnlearn
                          ? sample_node_request(g, cfg.experiment.forget_ratio, rng)
                          : sample_edge_request(g, cfg.experiment.forget_ratio, rng);
  req.write_file(out_path(gopts, "request.txt").string());
  return req;
}

int cmd_synth(const GlobalOpts& gopts, const RunConfig& cfg, const std::string& out_file) {
  Rng rng(cfg.seed);
  MultimodalGraph g = synth_graph(rng, cfg.graph.n, cfg.graph.d, cfg.graph.classes,
                                  cfg.graph.avg_degree, cfg.graph.homophily,
                                  cfg.graph.feature_scale);
  const fs::path path = out_file.empty() ? out_path(gopts, "graph.fdqg") : fs::path(out_file);
  save_graph(g, path.string());
  std::cout << "graph: n=" << g.n << " d=" << g.d << " classes=" << g.num_classes
            << " edges=" << g.undirected_edge_count() << " train=" << g.train_nodes().size()
            << " test=" << g.test_nodes().size() << "\n"
            << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& gopts, const RunConfig& cfg, const std::string& graph_file,
              const std::string& out_file, const std::string& trace_file) {
  const MultimodalGraph g = load_graph(graph_file);
  Rng rng(cfg.seed);
  GnnModel model = init_model(rng, g.d, cfg.arch.hidden_dim, cfg.arch.message_layers,
                              g.num_classes);
  TrainResult trained = train(std::move(model), g, cfg.train);

  const fs::path model_path =
      out_file.empty() ? out_path(gopts, "model.fdqm") : fs::path(out_file);
  save_model(trained.model, model_path.string());

  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < trained.loss_trace.size(); ++e) {
    csv += std::to_string(e + 1) + "," + fmt(trained.loss_trace[e]) + "\n";
  }
  const fs::path trace_path =
      trace_file.empty() ? out_path(gopts, "loss_trace.csv") : fs::path(trace_file);
  write_text(trace_path, csv);

  const F1Score score = f1_on_mask(trained.model, g, true);
  std::printf("final_loss = %.6f\n", trained.loss_trace.back());
  std::printf("test_micro_f1 = %.6f\n", score.micro);
  std::printf("test_macro_f1 = %.6f\n", score.macro);
  std::cout << "wrote " << model_path.string() << "\n";
  return 0;
}

int cmd_unlearn(const GlobalOpts& gopts, const RunConfig& cfg, const std::string& graph_file,
                const std::string& model_file, const std::string& request_path,
                const std::string& out_file, const std::string& report_file,
                const std::string& fim_dump) {
  const MultimodalGraph g = load_graph(graph_file);
  const GnnModel model = load_model(model_file);
  const ForgetRequest req = request_for_run(cfg, g, request_path, gopts);

  UnlearnOutcome outcome = run_unlearning(model, g, req, cfg.fdq);

  const fs::path model_path =
      out_file.empty() ? out_path(gopts, "unlearned.fdqm") : fs::path(out_file);
  save_model(outcome.model, model_path.string());

  const fs::path report_path =
      report_file.empty() ? out_path(gopts, "unlearn_report.csv") : fs::path(report_file);
  write_text(report_path, UnlearnReport::csv_header() + "\n" + outcome.report.to_csv_row() + "\n");

  if (!fim_dump.empty()) {
    const DiagFim train_imp = diag_fim(model, g, g.train_nodes());
    save_fim(train_imp, model, fim_dump);
  }

  std::cout << outcome.report.to_kv() << "\n" << outcome.report.plan_table;
  std::cout << "wrote " << model_path.string() << "\n";
  return 0;
}

int cmd_retrain_oracle(const GlobalOpts& gopts, const RunConfig& cfg,
                       const std::string& graph_file, const std::string& request_path,
                       const std::string& out_file) {
  const MultimodalGraph g = load_graph(graph_file);
  const ForgetRequest req = request_for_run(cfg, g, request_path, gopts);
  const ModelArch arch{g.d, cfg.arch.hidden_dim, cfg.arch.message_layers, g.num_classes};

  const auto t0 = std::chrono::steady_clock::now();
  OracleResult oracle = retrain_oracle(g, req, arch, cfg.train, cfg.seed);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path model_path =
      out_file.empty() ? out_path(gopts, "oracle.fdqm") : fs::path(out_file);
  save_model(oracle.model, model_path.string());

  const F1Score score = f1_on_mask(oracle.model, oracle.graph, true);
  std::printf("retrain_seconds = %.6f\n", seconds);
  std::printf("test_micro_f1 = %.6f\n", score.micro);
  std::printf("test_macro_f1 = %.6f\n", score.macro);
  std::cout << "wrote " << model_path.string() << "\n";
  return 0;
}

int cmd_eval(const GlobalOpts& gopts, const RunConfig& cfg, const std::string& metric,
             const std::string& graph_file, const std::vector<std::string>& model_files,
             const std::string& request_path, const std::string& out_file) {
  const MultimodalGraph g = load_graph(graph_file);
  std::string csv = "seed,mode,metric_name,value\n";

  if (metric == "f1") {
    if (model_files.empty()) throw ConfigError("eval --metric f1: at least one --model required");
    for (const auto& mf : model_files) {
      const GnnModel model = load_model(mf);
      const std::string label = fs::path(mf).stem().string();
      const F1Score score = f1_on_mask(model, g, true);
      csv += std::to_string(cfg.seed) + "," + label + ",micro_f1," + fmt(score.micro) + "\n";
      csv += std::to_string(cfg.seed) + "," + label + ",macro_f1," + fmt(score.macro) + "\n";
    }
  } else if (metric == "mia") {
    if (model_files.size() != 1) throw ConfigError("eval --metric mia: exactly one --model required");
    if (request_path.empty()) throw ConfigError("eval --metric mia: --request required");
    const GnnModel model = load_model(model_files[0]);
    const ForgetRequest req = ForgetRequest::read_file(request_path);
    if (req.kind != RequestKind::NodeUnlearn) {
      throw ConfigError("eval --metric mia: request must be node kind");
    }
    const std::string label = fs::path(model_files[0]).stem().string();
    for (std::uint64_t seed : cfg.experiment.seeds) {
      try {
        Rng rng(seed);
        const double auc = mia_auc(model, g, req.node_ids, rng);
        csv += std::to_string(seed) + "," + label + ",mia_auc," + fmt(auc) + "\n";
      } catch (const std::exception& e) {
        throw ConfigError("seed " + std::to_string(seed) + ": " + e.what());
      }
    }
  } else if (metric == "pa") {
    const ModelArch arch{g.d, cfg.arch.hidden_dim, cfg.arch.message_layers, g.num_classes};
    for (std::uint64_t seed : cfg.experiment.seeds) {
      try {
        Rng scen_rng(seed * 1000003ULL + 17ULL);
        const PaScenario scenario = make_pa_scenario(g, cfg.experiment.poison_fraction, scen_rng);
        const PaResult r = pa_experiment(scenario, arch, cfg.train, cfg.fdq, seed);
        csv += std::to_string(seed) + ",pa,f1_clean," + fmt(r.f1_clean) + "\n";
        csv += std::to_string(seed) + ",pa,f1_poisoned," + fmt(r.f1_poisoned) + "\n";
        csv += std::to_string(seed) + ",pa,f1_unlearned," + fmt(r.f1_unlearned) + "\n";
        csv += std::to_string(seed) + ",pa,f1_oracle," + fmt(r.f1_oracle) + "\n";
      } catch (const std::exception& e) {
        throw ConfigError("seed " + std::to_string(seed) + ": " + e.what());
      }
    }
  } else {
    throw ConfigError("eval: metric must be f1, mia or pa");
  }

  const fs::path path = out_file.empty() ? out_path(gopts, "results.csv") : fs::path(out_file);
  write_text(path, csv);
  std::cout << csv;
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_sweep(const GlobalOpts& gopts, const RunConfig& cfg, const std::string& param,
              double from, double to, double step, const std::string& graph_file,
              const std::string& model_file, const std::string& request_path,
              const std::string& out_file) {
  if (param != "k" && param != "rho") throw ConfigError("sweep: param must be k or rho");
  if (!(step > 0.0) || !(to >= from)) throw ConfigError("sweep: need step > 0 and to >= from");

  const MultimodalGraph g = load_graph(graph_file);
  const GnnModel model = load_model(model_file);
  const ForgetRequest req = request_for_run(cfg, g, request_path, gopts);

  std::string csv = "param,value,micro_f1\n";
  const int steps = static_cast<int>(std::floor((to - from) / step + 1e-9));
  for (int i = 0; i <= steps; ++i) {
    const double value = from + step * static_cast<double>(i);
    FdqConfig fdq_cfg = cfg.fdq;
    if (param == "k") {
      fdq_cfg.k = value;
      if (fdq_cfg.k_min > value) fdq_cfg.k_min = value;
    } else {
      fdq_cfg.rho = value;
    }
    UnlearnOutcome outcome = run_unlearning(model, g, req, fdq_cfg);
    const F1Score score = f1_on_mask(outcome.model, outcome.graph, true);
    csv += param + "," + fmt(value) + "," + fmt(score.micro) + "\n";
  }

  const fs::path path = out_file.empty() ? out_path(gopts, "sweep.csv") : fs::path(out_file);
  write_text(path, csv);
  std::cout << csv;
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FDQ: feature-dimension-aware quantile unlearning for multimodal GNNs"};
  app.require_subcommand(1);

  GlobalOpts gopts;
  app.add_option("--config", gopts.config_path, "TOML config file");
  std::uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "seed override");
  app.add_option("--out", gopts.out_dir, "output directory (default .)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic multimodal graph");
  std::uint64_t n_flag = 0, d_flag = 0, classes_flag = 0;
  double avg_degree_flag = 0, homophily_flag = -1, feature_scale_flag = -1;
  std::string synth_out;
  auto* n_opt = synth->add_option("--n", n_flag, "node count");
  auto* d_opt = synth->add_option("--d", d_flag, "feature dimension");
  auto* classes_opt = synth->add_option("--classes", classes_flag, "class count");
  auto* degree_opt = synth->add_option("--avg-degree", avg_degree_flag, "average degree");
  auto* homophily_opt = synth->add_option("--homophily", homophily_flag, "same-class edge fraction");
  auto* fscale_opt = synth->add_option("--feature-scale", feature_scale_flag, "feature noise scale");
  synth->add_option("--out-file", synth_out, "graph output path");

  auto* train_cmd = app.add_subcommand("train", "train a model on a graph file");
  std::string train_graph, train_out, train_trace;
  std::uint64_t epochs_flag = 0;
  double lr_flag = 0;
  train_cmd->add_option("--graph", train_graph, "graph file");
  train_cmd->add_option("--out-file", train_out, "model output path");
  train_cmd->add_option("--trace", train_trace, "loss trace CSV path");
  auto* epochs_opt = train_cmd->add_option("--epochs", epochs_flag, "training epochs");
  auto* lr_opt = train_cmd->add_option("--lr", lr_flag, "learning rate");

  auto* unlearn_cmd = app.add_subcommand("unlearn", "edit a trained model to forget a request");
  std::string ul_graph, ul_model, ul_request, ul_out, ul_report, ul_fim_dump;
  std::string kind_flag, mode_flag;
  double k_flag = -1, rho_flag = -1, gamma_flag = -1, kmin_flag = -1;
  std::uint64_t tau_flag = 0, hops_flag = 0;
  unlearn_cmd->add_option("--graph", ul_graph, "graph file");
  unlearn_cmd->add_option("--model", ul_model, "model checkpoint");
  unlearn_cmd->add_option("--request", ul_request, "forget request file");
  unlearn_cmd->add_option("--out-file", ul_out, "edited model output path");
  unlearn_cmd->add_option("--report", ul_report, "report CSV path");
  unlearn_cmd->add_option("--dump-fim", ul_fim_dump, "write the training-set importance dump");
  auto* kind_opt = unlearn_cmd->add_option("--kind", kind_flag, "node or edge");
  auto* mode_opt = unlearn_cmd->add_option("--mode", mode_flag, "full, nofd or noqtl");
  auto* k_opt = unlearn_cmd->add_option("--k", k_flag, "base quantile");
  auto* rho_opt = unlearn_cmd->add_option("--rho", rho_flag, "tightening ratio");
  auto* kmin_opt = unlearn_cmd->add_option("--k-min", kmin_flag, "quantile floor");
  auto* tau_opt = unlearn_cmd->add_option("--tau", tau_flag, "feature dimension gate");
  auto* gamma_opt = unlearn_cmd->add_option("--gamma", gamma_flag, "max scaling factor");
  auto* hops_opt = unlearn_cmd->add_option("--hops", hops_flag, "neighbor radius");

  auto* oracle_cmd = app.add_subcommand("retrain-oracle", "retrain from scratch on the retain set");
  std::string or_graph, or_request, or_out;
  oracle_cmd->add_option("--graph", or_graph, "graph file");
  oracle_cmd->add_option("--request", or_request, "forget request file");
  oracle_cmd->add_option("--out-file", or_out, "oracle model output path");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate utility, privacy or robustness");
  std::string ev_metric, ev_graph, ev_request, ev_out;
  std::vector<std::string> ev_models;
  eval_cmd->add_option("--metric", ev_metric, "f1, mia or pa")->required();
  eval_cmd->add_option("--graph", ev_graph, "graph file");
  eval_cmd->add_option("--model", ev_models, "model checkpoint (repeatable)");
  eval_cmd->add_option("--request", ev_request, "forget request file (mia)");
  eval_cmd->add_option("--out-file", ev_out, "results CSV path");

  auto* sweep_cmd = app.add_subcommand("sweep", "sweep k or rho and record unlearned F1");
  std::string sw_param = "k", sw_graph, sw_model, sw_request, sw_out;
  double sw_from = 0.1, sw_to = 0.9, sw_step = 0.1;
  sweep_cmd->add_option("--param", sw_param, "k or rho");
  sweep_cmd->add_option("--from", sw_from, "first value");
  sweep_cmd->add_option("--to", sw_to, "last value");
  sweep_cmd->add_option("--step", sw_step, "step size");
  sweep_cmd->add_option("--graph", sw_graph, "graph file");
  sweep_cmd->add_option("--model", sw_model, "model checkpoint");
  sweep_cmd->add_option("--request", sw_request, "forget request file");
  sweep_cmd->add_option("--out-file", sw_out, "sweep CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*seed_opt) gopts.seed = seed_flag;
    RunConfig cfg = effective_config(gopts);

    if (*synth) {
      if (*n_opt) cfg.graph.n = static_cast<NodeId>(n_flag);
      if (*d_opt) cfg.graph.d = d_flag;
      if (*classes_opt) cfg.graph.classes = static_cast<std::uint32_t>(classes_flag);
      if (*degree_opt) cfg.graph.avg_degree = avg_degree_flag;
      if (*homophily_opt) cfg.graph.homophily = homophily_flag;
      if (*fscale_opt) cfg.graph.feature_scale = feature_scale_flag;
      cfg.validate();
      return cmd_synth(gopts, cfg, synth_out);
    }
    if (*train_cmd) {
      if (*epochs_opt) cfg.train.epochs = epochs_flag;
      if (*lr_opt) cfg.train.lr = lr_flag;
      cfg.validate();
      if (train_graph.empty()) train_graph = out_path(gopts, "graph.fdqg").string();
      return cmd_train(gopts, cfg, train_graph, train_out, train_trace);
    }
    if (*unlearn_cmd) {
      if (*kind_opt) {
        if (kind_flag == "node") cfg.experiment.kind = RequestKind::NodeUnlearn;
        else if (kind_flag == "edge") cfg.experiment.kind = RequestKind::EdgeUnlearn;
        else throw ConfigError("--kind: must be node or edge");
      }
      if (*mode_opt) {
        const auto mode = fdq_mode_from_name(mode_flag);
        if (!mode) throw ConfigError("--mode: must be full, nofd or noqtl");
        cfg.fdq.mode = *mode;
      }
      if (*k_opt) cfg.fdq.k = k_flag;
      if (*rho_opt) cfg.fdq.rho = rho_flag;
      if (*kmin_opt) cfg.fdq.k_min = kmin_flag;
      if (*tau_opt) cfg.fdq.tau = tau_flag;
      if (*gamma_opt) cfg.fdq.gamma = gamma_flag;
      if (*hops_opt) cfg.fdq.hops = hops_flag;
      cfg.validate();
      if (ul_graph.empty()) ul_graph = out_path(gopts, "graph.fdqg").string();
      if (ul_model.empty()) ul_model = out_path(gopts, "model.fdqm").string();
      return cmd_unlearn(gopts, cfg, ul_graph, ul_model, ul_request, ul_out, ul_report,
                         ul_fim_dump);
    }
    if (*oracle_cmd) {
      cfg.validate();
      if (or_graph.empty()) or_graph = out_path(gopts, "graph.fdqg").string();
      return cmd_retrain_oracle(gopts, cfg, or_graph, or_request, or_out);
    }
    if (*eval_cmd) {
      cfg.validate();
      if (ev_graph.empty()) ev_graph = out_path(gopts, "graph.fdqg").string();
      return cmd_eval(gopts, cfg, ev_metric, ev_graph, ev_models, ev_request, ev_out);
    }
    if (*sweep_cmd) {
      cfg.validate();
      if (sw_graph.empty()) sw_graph = out_path(gopts, "graph.fdqg").string();
      if (sw_model.empty()) sw_model = out_path(gopts, "model.fdqm").string();
      return cmd_sweep(gopts, cfg, sw_param, sw_from, sw_to, sw_step, sw_graph, sw_model,
                       sw_request, sw_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValueError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
