#include "arcnp_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "arcnp/generators.hpp"

namespace arcnp::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string where(std::size_t line) {
  return line == 0 ? std::string{} : " (line " + std::to_string(line) + ")";
}

enum class Kind { String, Double, Int, U64, List, Enum };

struct Key {
  std::string name;
  Kind kind = Kind::String;
  std::vector<std::string> choices;
  /// Experiments the key applies to; empty means all.
  std::set<std::string> experiments;
  /// Default value given the partially resolved configuration; an empty
  /// optional marks a key that is not relevant there.
  std::function<std::optional<std::string>(const std::map<std::string, std::string>&)>
      fallback;
};

bool is_gp_process(const std::string& p) {
  return p == "eq" || p == "matern52" || p == "weakly-periodic";
}

bool trains(const std::map<std::string, std::string>& v) {
  return v.at("model_source") == "train-fresh";
}

bool uses_model(const std::map<std::string, std::string>& v) {
  return v.at("model_source") != "ideal-oracle";
}

gen::TaskSpec task_defaults(const std::map<std::string, std::string>& v) {
  const auto it = v.find("process");
  if (it == v.end()) return {};
  return gen::TaskSpec::defaults_for(gen::process_kind_from_string(it->second));
}

std::optional<std::string> always(std::string s) { return s; }

const std::vector<Key>& key_table() {
  using V = std::map<std::string, std::string>;
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    const std::vector<std::string> processes{
        "eq",      "matern52",         "weakly-periodic", "sawtooth",
        "aux-sawtooth", "mixture", "function-mixture", "audio"};
    k.push_back({"seed", Kind::U64, {}, {}, [](const V&) { return always("0"); }});
    k.push_back({"out", Kind::String, {}, {}, [](const V&) { return always("out"); }});
    k.push_back({"threads", Kind::Int, {}, {}, [](const V&) { return always("1"); }});
    k.push_back({"model_source",
                 Kind::Enum,
                 {"train-fresh", "load-checkpoint", "ideal-oracle"},
                 {},
                 [](const V& v) {
                   const std::string& e = v.at("experiment");
                   if (e == "eq-kl" || e == "mixture-prop1" ||
                       e == "smooth-samples" || e == "auxar") {
                     return always("ideal-oracle");
                   }
                   return always("train-fresh");
                 }});
    k.push_back({"process", Kind::Enum, processes,
                 {"eq-kl", "sawtooth-loglik", "mixture-prop1", "smooth-samples",
                  "auxar", "ordering-spread"},
                 [](const V& v) {
                   const std::string& e = v.at("experiment");
                   if (e == "eq-kl" || e == "smooth-samples") return always("eq");
                   if (e == "mixture-prop1" || e == "auxar") {
                     return always("function-mixture");
                   }
                   return always("sawtooth");
                 }});
    k.push_back({"checkpoint", Kind::String, {}, {},
                 [](const V& v) -> std::optional<std::string> {
                   if (v.at("model_source") != "load-checkpoint") return {};
                   return "";
                 }});
    k.push_back({"save_checkpoint", Kind::String, {}, {},
                 [](const V& v) -> std::optional<std::string> {
                   if (!trains(v)) return {};
                   return "";
                 }});
    k.push_back({"noise_variance", Kind::Double, {}, {},
                 [](const V& v) -> std::optional<std::string> {
                   const auto it = v.find("process");
                   if (it == v.end() || !is_gp_process(it->second)) return {};
                   return "0.05";
                 }});
    k.push_back({"min_context", Kind::Int, {},
                 {"eq-kl", "sawtooth-loglik", "mixture-prop1", "auxar"},
                 [](const V& v) {
                   if (v.at("experiment") == "mixture-prop1") return always("0");
                   return always(std::to_string(task_defaults(v).min_context));
                 }});
    k.push_back({"max_context", Kind::Int, {},
                 {"eq-kl", "sawtooth-loglik", "mixture-prop1", "auxar"},
                 [](const V& v) {
                   if (v.at("experiment") == "mixture-prop1") return always("5");
                   return always(std::to_string(task_defaults(v).max_context));
                 }});
    k.push_back({"num_targets", Kind::Int, {},
                 {"eq-kl", "sawtooth-loglik", "auxar", "ordering-spread"},
                 [](const V& v) {
                   return always(std::to_string(task_defaults(v).num_targets));
                 }});
    k.push_back({"lower", Kind::Double, {}, {"eq-kl", "sawtooth-loglik", "mixture-prop1",
                  "smooth-samples", "auxar", "ordering-spread"},
                 [](const V&) { return always("-2"); }});
    k.push_back({"upper", Kind::Double, {}, {"eq-kl", "sawtooth-loglik", "mixture-prop1",
                  "smooth-samples", "auxar", "ordering-spread"},
                 [](const V&) { return always("2"); }});
    k.push_back({"eval_tasks", Kind::Int, {}, {}, [](const V& v) {
                   const std::string& e = v.at("experiment");
                   if (e == "eq-kl") return always("1024");
                   if (e == "sawtooth-loglik") return always("512");
                   if (e == "mixture-prop1") return always("10");
                   if (e == "smooth-samples") return always("200");
                   if (e == "predprey") return always("64");
                   if (e == "auxar") return always("1000");
                   return always("64");
                 }});
    k.push_back({"ordering", Kind::Enum, {"random", "left-to-right"}, {},
                 [](const V& v) {
                   const std::string& e = v.at("experiment");
                   if (e == "mixture-prop1" || e == "smooth-samples") {
                     return always("left-to-right");
                   }
                   return always("random");
                 }});
    k.push_back({"block_size", Kind::Int, {},
                 {"eq-kl", "sawtooth-loglik", "mixture-prop1", "predprey"},
                 [](const V&) { return always("1"); }});
    k.push_back({"transform", Kind::Enum, {"identity", "log1p"}, {},
                 [](const V& v) -> std::optional<std::string> {
                   if (!uses_model(v)) return {};
                   return v.at("experiment") == "predprey" ? "log1p" : "identity";
                 }});
    auto train_key = [&](std::string name, Kind kind, std::string def) {
      k.push_back({std::move(name), kind, {}, {},
                   [def](const V& v) -> std::optional<std::string> {
                     if (!trains(v)) return {};
                     return def;
                   }});
    };
    k.push_back({"learning_rate", Kind::Double, {}, {},
                 [](const V& v) -> std::optional<std::string> {
                   if (!trains(v)) return {};
                   return v.at("experiment") == "predprey" ? "0.0001" : "0.0003";
                 }});
    train_key("batch_size", Kind::Int, "16");
    train_key("epochs", Kind::Int, "20");
    train_key("tasks_per_epoch", Kind::Int, "1024");
    train_key("validation_tasks", Kind::Int, "256");
    train_key("encoding_dim", Kind::Int, "64");
    train_key("hidden_width", Kind::Int, "64");
    k.push_back({"mc_samples", Kind::Int, {}, {"eq-kl", "mixture-prop1"},
                 [](const V& v) {
                   return always(v.at("experiment") == "eq-kl" ? "16" : "10000");
                 }});
    k.push_back({"target_inputs", Kind::List, {}, {"mixture-prop1"},
                 [](const V&) { return always("1,2,4,6"); }});
    k.push_back({"aux_length", Kind::Int, {}, {"auxar"},
                 [](const V&) { return always("8"); }});
    k.push_back({"aux_count", Kind::Int, {}, {"auxar"},
                 [](const V&) { return always("64"); }});
    k.push_back({"grid_sizes", Kind::List, {}, {"smooth-samples"},
                 [](const V&) { return always("8,16,32,64"); }});
    k.push_back({"query_points", Kind::Int, {}, {"smooth-samples"},
                 [](const V&) { return always("100"); }});
    k.push_back({"n_orderings", Kind::Int, {}, {"ordering-spread"},
                 [](const V&) { return always("16"); }});
    k.push_back({"spread_contexts", Kind::List, {}, {"ordering-spread"},
                 [](const V&) { return always("0,20"); }});
    k.push_back({"split", Kind::Enum,
                 {"mixed", "interpolation", "forecasting", "reconstruction"},
                 {"predprey"}, [](const V&) { return always("mixed"); }});
    k.push_back({"lv_substeps", Kind::Int, {}, {"predprey"},
                 [](const V&) { return always("1"); }});
    k.push_back({"lv_drift", Kind::Enum, {"classical", "literal"}, {"predprey"},
                 [](const V&) { return always("classical"); }});
    k.push_back({"min_points", Kind::Int, {}, {"predprey"},
                 [](const V&) { return always("150"); }});
    k.push_back({"max_points", Kind::Int, {}, {"predprey"},
                 [](const V&) { return always("250"); }});
    k.push_back({"samples", Kind::Int, {}, {},
                 [](const V&) { return always("4"); }});
    return k;
  }();
  return keys;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto r = std::from_chars(b, e, out);
  return r.ec == std::errc{} && r.ptr == e;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<double> split_list(const std::string& field, const std::string& s,
                               std::size_t line) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    if (!parse_double(trim(item), v)) {
      throw ConfigError(field, line, field + ": not a number list" + where(line));
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(field, line, field + ": empty list" + where(line));
  return out;
}

void check_value(const Key& key, const std::string& value, std::size_t line) {
  const std::string& f = key.name;
  switch (key.kind) {
    case Kind::String:
      return;
    case Kind::Double: {
      double d = 0.0;
      if (!parse_double(value, d) || !std::isfinite(d)) {
        throw ConfigError(f, line, f + ": expected a number" + where(line));
      }
      return;
    }
    case Kind::Int: {
      int i = 0;
      if (!parse_number(value, i)) {
        throw ConfigError(f, line, f + ": expected an integer" + where(line));
      }
      return;
    }
    case Kind::U64: {
      std::uint64_t u = 0;
      if (!parse_number(value, u)) {
        throw ConfigError(f, line,
                          f + ": expected a non-negative integer" + where(line));
      }
      return;
    }
    case Kind::List:
      split_list(f, value, line);
      return;
    case Kind::Enum:
      if (std::find(key.choices.begin(), key.choices.end(), value) ==
          key.choices.end()) {
        std::string opts;
        for (const auto& c : key.choices) opts += (opts.empty() ? "" : ", ") + c;
        throw ConfigError(f, line,
                          f + ": '" + value + "' is not one of " + opts + where(line));
      }
      return;
  }
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, 0, field + ": " + what);
}

}  // namespace

ConfigError::ConfigError(std::string field, std::size_t line,
                         const std::string& what)
    : std::runtime_error(what), field_(std::move(field)), line_(line) {}

Settings parse_settings(const std::string& text) {
  Settings out;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("", 0, std::string("manifest: ") + e.what());
    }
    if (!doc.contains("config") || !doc.at("config").is_object()) {
      throw ConfigError("config", 0, "manifest has no config object");
    }
    for (const auto& [k, v] : doc.at("config").items()) {
      out[k] = {v.is_string() ? v.get<std::string>() : v.dump(), 0};
    }
    return out;
  }
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", line, "expected key = value" + where(line));
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line, "empty key" + where(line));
    if (out.count(key)) {
      throw ConfigError(key, line, key + ": duplicate key" + where(line));
    }
    out[key] = {value, line};
  }
  return out;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str());
}

Settings parse_overrides(const std::vector<std::string>& args) {
  Settings out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() == 2) {
      throw ConfigError(a, 0, "unexpected argument '" + a + "'");
    }
    std::string key = a.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= args.size()) {
        throw ConfigError(key, 0, key + ": missing value on the command line");
      }
      value = args[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = {value, 0};
  }
  return out;
}

ExperimentConfig ExperimentConfig::resolve(const Settings& settings) {
  ExperimentConfig cfg;
  const auto exp = settings.find("experiment");
  if (exp == settings.end()) {
    throw ConfigError("experiment", 0, "experiment: missing");
  }
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), exp->second.value) == names.end()) {
    throw ConfigError("experiment", exp->second.line,
                      "experiment: unknown name '" + exp->second.value + "'" +
                          where(exp->second.line));
  }
  cfg.experiment_ = exp->second.value;
  cfg.values_["experiment"] = cfg.experiment_;
  cfg.defaulted_["experiment"] = false;

  for (const auto& [name, setting] : settings) {
    if (name == "experiment") continue;
    if (!find_key(name)) {
      throw ConfigError(name, setting.line,
                        name + ": unknown key" + where(setting.line));
    }
  }

  // Keys are resolved in table order so later defaults can depend on
  // earlier values.
  for (const Key& key : key_table()) {
    if (!key.experiments.empty() && !key.experiments.count(cfg.experiment_)) {
      continue;
    }
    const auto given = settings.find(key.name);
    if (given != settings.end()) {
      check_value(key, given->second.value, given->second.line);
      cfg.values_[key.name] = given->second.value;
      cfg.defaulted_[key.name] = false;
      continue;
    }
    const auto def = key.fallback(cfg.values_);
    if (!def) continue;
    cfg.values_[key.name] = *def;
    cfg.defaulted_[key.name] = true;
  }

  // Cross-field checks.
  const std::string& e = cfg.experiment_;
  const std::string source = cfg.get("model_source");
  require(cfg.get_int("threads") >= 1, "threads", "must be at least 1");
  require(cfg.get_int("eval_tasks") >= 1, "eval_tasks", "must be positive");
  require(cfg.get_int("samples") >= 0, "samples", "must be non-negative");
  if (cfg.values_.count("block_size")) {
    require(cfg.get_int("block_size") >= 1, "block_size", "must be at least 1");
  }
  if (cfg.values_.count("lower")) {
    require(cfg.get_double("upper") > cfg.get_double("lower"), "upper",
            "must exceed lower");
  }
  if (cfg.values_.count("min_context")) {
    require(cfg.get_int("min_context") >= 0 &&
                cfg.get_int("max_context") >= cfg.get_int("min_context"),
            "max_context", "context range must satisfy 0 <= min <= max");
  }
  if (cfg.values_.count("num_targets")) {
    require(cfg.get_int("num_targets") >= 1, "num_targets", "must be positive");
  }
  if (cfg.values_.count("noise_variance")) {
    require(cfg.get_double("noise_variance") >= 0.0, "noise_variance",
            "must be non-negative");
  }
  if (source == "load-checkpoint") {
    const std::string path = cfg.get("checkpoint");
    require(!path.empty(), "checkpoint", "required with model_source = load-checkpoint");
    require(std::filesystem::exists(path), "checkpoint",
            "file '" + path + "' does not exist");
  }
  if (source == "train-fresh") {
    for (const char* k : {"batch_size", "epochs", "tasks_per_epoch",
                          "validation_tasks", "encoding_dim", "hidden_width"}) {
      require(cfg.get_int(k) >= 1, k, "must be positive");
    }
    require(cfg.get_double("learning_rate") > 0.0, "learning_rate", "must be positive");
  }
  if (source == "ideal-oracle") {
    if (e == "predprey") {
      throw ConfigError("model_source", 0,
                        "model_source: predprey has no ideal oracle");
    }
    const std::string p = cfg.get("process");
    require(is_gp_process(p) || p == "function-mixture", "model_source",
            "no ideal oracle for process '" + p + "'");
  }
  if (e == "eq-kl" || e == "smooth-samples") {
    require(is_gp_process(cfg.get("process")), "process",
            "this experiment needs a Gaussian-process truth");
  }
  if (e == "mixture-prop1") {
    require(source == "ideal-oracle", "model_source",
            "mixture-prop1 compares ideal oracles only");
    require(cfg.get("process") == "function-mixture", "process",
            "mixture-prop1 needs the function mixture");
    require(cfg.get_int("mc_samples") >= 2, "mc_samples", "must be at least 2");
  }
  if (e == "eq-kl") {
    require(cfg.get_int("mc_samples") >= 2, "mc_samples", "must be at least 2");
  }
  if (e == "auxar") {
    require(cfg.get_int("aux_length") >= 0, "aux_length", "must be non-negative");
    require(cfg.get_int("aux_count") >= 1, "aux_count", "must be positive");
  }
  if (e == "smooth-samples") {
    for (double n : cfg.get_list("grid_sizes")) {
      require(n >= 1 && n == std::floor(n), "grid_sizes", "must be positive integers");
    }
    require(cfg.get_int("query_points") >= 1, "query_points", "must be positive");
  }
  if (e == "ordering-spread") {
    require(cfg.get_int("n_orderings") >= 1, "n_orderings", "must be positive");
    for (double n : cfg.get_list("spread_contexts")) {
      require(n >= 0 && n == std::floor(n), "spread_contexts",
              "must be non-negative integers");
    }
  }
  if (e == "predprey") {
    require(cfg.get_int("lv_substeps") >= 1, "lv_substeps", "must be positive");
    require(cfg.get_int("min_points") >= 2 &&
                cfg.get_int("max_points") >= cfg.get_int("min_points"),
            "max_points", "point range must satisfy 2 <= min <= max");
  }
  return cfg;
}

bool ExperimentConfig::is_default(const std::string& key) const {
  const auto it = defaulted_.find(key);
  return it != defaulted_.end() && it->second;
}

std::string ExperimentConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw ConfigError(key, 0, key + ": not used by experiment " + experiment_);
  }
  return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const {
  double d = 0.0;
  if (!parse_double(get(key), d)) throw ConfigError(key, 0, key + ": expected a number");
  return d;
}

int ExperimentConfig::get_int(const std::string& key) const {
  int i = 0;
  if (!parse_number(get(key), i)) {
    throw ConfigError(key, 0, key + ": expected an integer");
  }
  return i;
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  std::uint64_t u = 0;
  if (!parse_number(get(key), u)) {
    throw ConfigError(key, 0, key + ": expected a non-negative integer");
  }
  return u;
}

std::vector<double> ExperimentConfig::get_list(const std::string& key) const {
  return split_list(key, get(key), 0);
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace arcnp::cli
