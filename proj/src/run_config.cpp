#include "fdq/run_config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "fdq/error.hpp"

namespace fdq {

namespace {

struct TomlValue {
  enum class Kind { Integer, Float, Bool, String, IntArray } kind;
  std::int64_t integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<std::int64_t> array;
};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_scalar(const std::string& raw, const std::string& where) {
  TomlValue v{};
  if (raw.empty()) throw ConfigError(where + ": missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw ConfigError(where + ": unterminated string");
    v.kind = TomlValue::Kind::String;
    v.text = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = TomlValue::Kind::Bool;
    v.boolean = raw == "true";
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') throw ConfigError(where + ": unterminated array");
    v.kind = TomlValue::Kind::IntArray;
    std::string body = raw.substr(1, raw.size() - 2);
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t comma = body.find(',', pos);
      if (comma == std::string::npos) comma = body.size();
      const std::string item = trim(body.substr(pos, comma - pos));
      if (!item.empty()) {
        std::int64_t x = 0;
        auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (ec != std::errc() || p != item.data() + item.size()) {
          throw ConfigError(where + ": array entries must be integers");
        }
        v.array.push_back(x);
      }
      pos = comma + 1;
    }
    return v;
  }
  // Number: integer when it parses fully as one, float otherwise.
  {
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), x);
    if (ec == std::errc() && p == raw.data() + raw.size()) {
      v.kind = TomlValue::Kind::Integer;
      v.integer = x;
      return v;
    }
  }
  {
    double x = 0.0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), x);
    if (ec == std::errc() && p == raw.data() + raw.size()) {
      v.kind = TomlValue::Kind::Float;
      v.real = x;
      return v;
    }
  }
  throw ConfigError(where + ": cannot parse value '" + raw + "'");
}

double as_float(const TomlValue& v, const std::string& where) {
  if (v.kind == TomlValue::Kind::Float) return v.real;
  if (v.kind == TomlValue::Kind::Integer) return static_cast<double>(v.integer);
  throw ConfigError(where + ": expected a number");
}

std::int64_t as_int(const TomlValue& v, const std::string& where) {
  if (v.kind != TomlValue::Kind::Integer) throw ConfigError(where + ": expected an integer");
  return v.integer;
}

std::uint64_t as_uint(const TomlValue& v, const std::string& where) {
  const std::int64_t x = as_int(v, where);
  if (x < 0) throw ConfigError(where + ": must be nonnegative");
  return static_cast<std::uint64_t>(x);
}

bool as_bool(const TomlValue& v, const std::string& where) {
  if (v.kind != TomlValue::Kind::Bool) throw ConfigError(where + ": expected true or false");
  return v.boolean;
}

const std::string& as_string(const TomlValue& v, const std::string& where) {
  if (v.kind != TomlValue::Kind::String) throw ConfigError(where + ": expected a quoted string");
  return v.text;
}

void apply_key(RunConfig& cfg, const std::string& section, const std::string& key,
               const TomlValue& v) {
  const std::string where = section.empty() ? key : section + "." + key;

  if (section.empty()) {
    if (key == "seed") {
      cfg.seed = as_uint(v, where);
      return;
    }
  } else if (section == "graph") {
    if (key == "n") { cfg.graph.n = static_cast<NodeId>(as_uint(v, where)); return; }
    if (key == "d") { cfg.graph.d = as_uint(v, where); return; }
    if (key == "classes") { cfg.graph.classes = static_cast<std::uint32_t>(as_uint(v, where)); return; }
    if (key == "avg_degree") { cfg.graph.avg_degree = as_float(v, where); return; }
    if (key == "homophily") { cfg.graph.homophily = as_float(v, where); return; }
    if (key == "feature_scale") { cfg.graph.feature_scale = as_float(v, where); return; }
  } else if (section == "arch") {
    if (key == "hidden_dim") { cfg.arch.hidden_dim = as_uint(v, where); return; }
    if (key == "message_layers") { cfg.arch.message_layers = as_uint(v, where); return; }
  } else if (section == "train") {
    if (key == "epochs") { cfg.train.epochs = as_uint(v, where); return; }
    if (key == "lr") { cfg.train.lr = as_float(v, where); return; }
  } else if (section == "fdq") {
    if (key == "k") { cfg.fdq.k = as_float(v, where); return; }
    if (key == "rho") { cfg.fdq.rho = as_float(v, where); return; }
    if (key == "k_min") { cfg.fdq.k_min = as_float(v, where); return; }
    if (key == "tau") { cfg.fdq.tau = as_uint(v, where); return; }
    if (key == "gamma") { cfg.fdq.gamma = as_float(v, where); return; }
    if (key == "eps") { cfg.fdq.eps = as_float(v, where); return; }
    if (key == "hops") { cfg.fdq.hops = as_uint(v, where); return; }
    if (key == "mode") {
      const auto mode = fdq_mode_from_name(as_string(v, where));
      if (!mode) throw ConfigError(where + ": must be \"full\", \"nofd\" or \"noqtl\"");
      cfg.fdq.mode = *mode;
      return;
    }
    if (key == "edit_biases") { cfg.fdq.edit_biases = as_bool(v, where); return; }
    if (key == "fim_on_retain") { cfg.fdq.fim_on_retain = as_bool(v, where); return; }
  } else if (section == "experiment") {
    if (key == "forget_ratio") { cfg.experiment.forget_ratio = as_float(v, where); return; }
    if (key == "poison_fraction") { cfg.experiment.poison_fraction = as_float(v, where); return; }
    if (key == "seeds") {
      if (v.kind != TomlValue::Kind::IntArray) throw ConfigError(where + ": expected an array");
      cfg.experiment.seeds.clear();
      for (std::int64_t x : v.array) {
        if (x < 0) throw ConfigError(where + ": seeds must be nonnegative");
        cfg.experiment.seeds.push_back(static_cast<std::uint64_t>(x));
      }
      return;
    }
    if (key == "kind") {
      const std::string& s = as_string(v, where);
      if (s == "node") { cfg.experiment.kind = RequestKind::NodeUnlearn; return; }
      if (s == "edge") { cfg.experiment.kind = RequestKind::EdgeUnlearn; return; }
      throw ConfigError(where + ": must be \"node\" or \"edge\"");
    }
  }
  throw ConfigError(where + ": unknown configuration key");
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");

  RunConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string raw = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    apply_key(cfg, section, key, parse_scalar(raw, where));
  }
  return cfg;
}

void RunConfig::validate() const {
  if (graph.classes < 2) throw ConfigError("graph.classes: must be >= 2");
  if (graph.n < graph.classes) throw ConfigError("graph.n: must be >= graph.classes");
  if (graph.d < 1) throw ConfigError("graph.d: must be >= 1");
  if (!(graph.avg_degree >= 1.0)) throw ConfigError("graph.avg_degree: must be >= 1");
  if (!(graph.avg_degree < static_cast<double>(graph.n))) {
    throw ConfigError("graph.avg_degree: must be below graph.n");
  }
  if (!(graph.homophily >= 0.0 && graph.homophily <= 1.0)) {
    throw ConfigError("graph.homophily: must be in [0, 1]");
  }
  if (!(graph.feature_scale >= 0.0) || !std::isfinite(graph.feature_scale)) {
    throw ConfigError("graph.feature_scale: must be a nonnegative number");
  }
  if (arch.hidden_dim < 1) throw ConfigError("arch.hidden_dim: must be >= 1");
  if (arch.message_layers < 1) throw ConfigError("arch.message_layers: must be >= 1");
  if (train.epochs < 1) throw ConfigError("train.epochs: must be >= 1");
  if (!(train.lr > 0.0) || !std::isfinite(train.lr)) {
    throw ConfigError("train.lr: must be a positive number");
  }
  try {
    fdq.validate();
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
  if (!(experiment.forget_ratio > 0.0 && experiment.forget_ratio <= 1.0)) {
    throw ConfigError("experiment.forget_ratio: must be in (0, 1]");
  }
  if (experiment.seeds.empty()) throw ConfigError("experiment.seeds: must be nonempty");
  if (!(experiment.poison_fraction >= 0.0 && experiment.poison_fraction <= 0.5)) {
    throw ConfigError("experiment.poison_fraction: must be in [0, 0.5]");
  }
}

}  // namespace fdq
