#pragma once

// JSON experiment configuration: strict key checking, defaults, validation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alsim/experiment.hpp"

namespace alsim {

struct config_file_missing : config_error {
  using config_error::config_error;
};
struct config_parse_error : config_error {
  using config_error::config_error;
};
struct config_validation_error : config_error {
  using config_error::config_error;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::string output_dir;  // empty: CLI flag or ALSIM_OUT_DIR decides
  int verbosity = 1;
  // margin_power schemes declared with "fit" instead of "schedule".
  struct PowerFitRequest {
    std::size_t scheme_index = 0;
    std::vector<PieceGrid> grid;
    std::size_t trials = 1;
    double rho = 1.0;
  };
  std::vector<PowerFitRequest> power_fits;
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

class ConfigReader {
 public:
  explicit ConfigReader(std::string path) : path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw config_validation_error(path_ + ": " + key + ": " + what);
  }

  void check_keys(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(where.empty() ? "<root>" : where, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) continue;
      std::string best;
      std::size_t best_d = std::string::npos;
      for (const char* a : allowed) {
        const auto d = edit_distance(key, a);
        if (d < best_d) {
          best_d = d;
          best = a;
        }
      }
      std::string msg = "unknown key";
      if (best_d <= std::max<std::size_t>(2, key.size() / 3)) msg += " (did you mean '" + best + "'?)";
      fail(join(where, key), msg);
    }
  }

  static std::string join(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

  template <class T>
  T get(const nlohmann::json& obj, const std::string& where, const char* key, T fallback) const {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
      return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(join(where, key), "wrong type");
    }
  }

  std::size_t count(const nlohmann::json& obj, const std::string& where, const char* key, std::size_t fallback, std::size_t min_value) const {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(join(where, key), "must be an integer");
    if (v.get<long long>() < static_cast<long long>(min_value)) fail(join(where, key), "must be >= " + std::to_string(min_value));
    return v.get<std::size_t>();
  }

  ModelKind kind(const nlohmann::json& obj, const std::string& where, const char* key, ModelKind fallback) const {
    const auto s = get<std::string>(obj, where, key, to_string(fallback));
    const auto k = parse_model_kind(s);
    if (!k) fail(join(where, key), "unknown model kind '" + s + "' (logistic | kernel_logistic | token_tagger)");
    return *k;
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline DomainProfile read_profile(const ConfigReader& r, const nlohmann::json& j, const std::string& where, DomainProfile d) {
  r.check_keys(j, where, {"mean_length", "strong_prob", "compound_prob"});
  d.mean_length = r.get<double>(j, where, "mean_length", d.mean_length);
  d.strong_prob = r.get<double>(j, where, "strong_prob", d.strong_prob);
  d.compound_prob = r.get<double>(j, where, "compound_prob", d.compound_prob);
  return d;
}

inline DataSource read_source(const ConfigReader& r, const nlohmann::json& j, const std::filesystem::path& base_dir) {
  const std::string where = "source";
  if (!j.is_object() || !j.contains("type")) r.fail(where, "must be an object with a 'type' (svmlight | covtype_like | segmentation)");
  const auto type = r.get<std::string>(j, where, "type", "");
  if (type == "svmlight") {
    r.check_keys(j, where, {"type", "path", "subsample", "subsample_seed", "scale"});
    SvmlightSource s;
    s.path = r.get<std::string>(j, where, "path", "");
    if (s.path.empty()) r.fail("source.path", "required");
    std::filesystem::path p(s.path);
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) r.fail("source.path", "file '" + p.string() + "' does not exist");
    s.path = p.string();
    if (j.contains("subsample") && !j["subsample"].is_null()) s.subsample = r.count(j, where, "subsample", 0, 1);
    s.subsample_seed = r.get<std::uint64_t>(j, where, "subsample_seed", 0);
    s.scale = r.get<bool>(j, where, "scale", true);
    return s;
  }
  if (type == "covtype_like") {
    r.check_keys(j, where, {"type", "n", "seed"});
    return CovtypeLikeSource{r.count(j, where, "n", 55000, 1), r.get<std::uint64_t>(j, where, "seed", 0)};
  }
  if (type == "segmentation") {
    r.check_keys(j, where, {"type", "n_sentences", "domain_mix", "domain_a", "domain_b", "vocab_size", "rule_version", "seed"});
    CorpusSource c;
    c.config.n_sentences = r.count(j, where, "n_sentences", c.config.n_sentences, 1);
    c.config.domain_mix = r.get<double>(j, where, "domain_mix", c.config.domain_mix);
    if (!(c.config.domain_mix > 0 && c.config.domain_mix < 1)) r.fail("source.domain_mix", "must be in (0,1)");
    if (j.contains("domain_a")) c.config.domain_a = read_profile(r, j["domain_a"], "source.domain_a", c.config.domain_a);
    if (j.contains("domain_b")) c.config.domain_b = read_profile(r, j["domain_b"], "source.domain_b", c.config.domain_b);
    c.config.vocab_size = static_cast<std::uint32_t>(r.count(j, where, "vocab_size", c.config.vocab_size, 3));
    c.config.rule_version = r.get<int>(j, where, "rule_version", 1);
    if (c.config.rule_version != 1 && c.config.rule_version != 2) r.fail("source.rule_version", "must be 1 or 2");
    c.seed = r.get<std::uint64_t>(j, where, "seed", 0);
    return c;
  }
  r.fail("source.type", "unknown source type '" + type + "' (svmlight | covtype_like | segmentation)");
}

inline ExpirationPolicy read_policy(const ConfigReader& r, const nlohmann::json& j, const std::string& where) {
  r.check_keys(j, where, {"hard_limit", "retention"});
  if (j.contains("retention")) {
    if (j.contains("hard_limit")) r.fail(where, "give either hard_limit or retention, not both");
    GradualExpiration g{r.get<std::vector<double>>(j, where, "retention", {})};
    if (g.retention.empty()) r.fail(where + ".retention", "must be a nonempty list");
    for (double p : g.retention)
      if (p < 0 || p > 1) r.fail(where + ".retention", "probabilities must be in [0,1]");
    return g;
  }
  HardExpiration h;
  if (j.contains("hard_limit") && !j["hard_limit"].is_null()) {
    const int limit = r.get<int>(j, where, "hard_limit", 0);
    if (limit < 0) r.fail(where + ".hard_limit", "must be >= 0");
    h.limit_rounds = limit;
  }
  return h;
}

inline PowerSchedule read_schedule(const ConfigReader& r, const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) r.fail(where, "must be a nonempty list of pieces");
  PowerSchedule s;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto w = where + "[" + std::to_string(i) + "]";
    r.check_keys(j[i], w, {"t_start", "a", "b", "alpha"});
    s.pieces.push_back({r.get<double>(j[i], w, "t_start", 0.0), r.get<double>(j[i], w, "a", 0.0), r.get<double>(j[i], w, "b", 0.0),
                        r.get<double>(j[i], w, "alpha", 1.0)});
  }
  try {
    validate(s);
  } catch (const precondition_error& e) {
    r.fail(where, e.what());
  }
  return s;
}

inline RunConfig::PowerFitRequest read_fit(const ConfigReader& r, const nlohmann::json& j, const std::string& where, std::size_t index) {
  r.check_keys(j, where, {"grid", "trials", "rho"});
  RunConfig::PowerFitRequest req;
  req.scheme_index = index;
  req.trials = r.count(j, where, "trials", 1, 1);
  req.rho = r.get<double>(j, where, "rho", 1.0);
  if (!(req.rho > 0 && req.rho <= 1)) r.fail(where + ".rho", "must be in (0,1]");
  if (!j.contains("grid") || !j["grid"].is_array() || j["grid"].empty()) r.fail(where + ".grid", "must be a nonempty list of pieces");
  for (std::size_t i = 0; i < j["grid"].size(); ++i) {
    const auto& g = j["grid"][i];
    const auto w = where + ".grid[" + std::to_string(i) + "]";
    r.check_keys(g, w, {"t_start", "a", "b", "alpha"});
    PieceGrid pg;
    pg.t_start = r.get<double>(g, w, "t_start", 0.0);
    const auto as = r.get<std::vector<double>>(g, w, "a", {0.0});
    const auto bs = r.get<std::vector<double>>(g, w, "b", {0.0});
    const auto alphas = r.get<std::vector<double>>(g, w, "alpha", {1.0});
    for (double a : as)
      for (double b : bs)
        for (double al : alphas) pg.candidates.emplace_back(a, b, al);
    if (pg.candidates.empty()) r.fail(w, "has no candidates");
    req.grid.push_back(std::move(pg));
  }
  return req;
}

inline SchemeConfig read_scheme(const ConfigReader& r, const nlohmann::json& j, const std::string& where) {
  r.check_keys(j, where, {"name", "kind", "scorer", "schedule", "fit", "simple_model", "complex_model", "batch_size", "subset_size", "length_penalty"});
  SchemeConfig s;
  const auto kind = r.get<std::string>(j, where, "kind", "");
  if (kind == "passive") s.kind = SchemeKind::passive;
  else if (kind == "margin") s.kind = SchemeKind::margin_pure;
  else if (kind == "naive_adaptive") s.kind = SchemeKind::margin_naive_adaptive;
  else if (kind == "power") s.kind = SchemeKind::margin_power;
  else r.fail(where + ".kind", "unknown scheme kind '" + kind + "' (passive | margin | naive_adaptive | power)");
  s.scorer = r.kind(j, where, "scorer", ModelKind::logistic);
  s.simple_model = r.kind(j, where, "simple_model", ModelKind::logistic);
  s.complex_model = r.kind(j, where, "complex_model", ModelKind::kernel_logistic);
  if (j.contains("batch_size")) s.batch_size = r.count(j, where, "batch_size", 1, 1);
  if (j.contains("subset_size")) s.subset_size = r.count(j, where, "subset_size", 1, 1);
  if (j.contains("length_penalty")) s.length_penalty = r.get<double>(j, where, "length_penalty", 0.0);
  if (s.kind == SchemeKind::margin_power) {
    if (j.contains("schedule") == j.contains("fit")) r.fail(where, "power schemes need exactly one of 'schedule' or 'fit'");
    if (j.contains("schedule")) s.schedule = read_schedule(r, j["schedule"], where + ".schedule");
    else s.schedule.pieces = {{0.0, 0.5, 0.0, 1.0}};  // placeholder until fitted
  } else if (j.contains("schedule") || j.contains("fit")) {
    r.fail(where, "'schedule' and 'fit' apply only to power schemes");
  }
  s.name = r.get<std::string>(j, where, "name", default_scheme_name(s));
  return s;
}

inline Event read_event(const ConfigReader& r, const nlohmann::json& j, const std::string& where, int& round) {
  if (!j.is_object()) r.fail(where, "expected an object");
  const auto type = r.get<std::string>(j, where, "type", "");
  if (!j.contains("round") || !j["round"].is_number_integer()) r.fail(where + ".round", "required integer");
  round = j["round"].get<int>();
  if (round < 0) r.fail(where + ".round", "must be >= 0");
  if (type == "model_switch") {
    r.check_keys(j, where, {"type", "round", "to", "reseed"});
    return ModelSwitch{r.kind(j, where, "to", ModelKind::kernel_logistic), r.get<bool>(j, where, "reseed", false)};
  }
  if (type == "label_revision") {
    r.check_keys(j, where, {"type", "round", "fraction", "extra_token_flip_prob", "rule_version"});
    LabelRevisionEvent ev;
    ev.rule.target_fraction = r.get<double>(j, where, "fraction", 0.0);
    ev.rule.extra_token_flip_prob = r.get<double>(j, where, "extra_token_flip_prob", ev.rule.extra_token_flip_prob);
    if (ev.rule.target_fraction < 0 || ev.rule.target_fraction > 1) r.fail(where + ".fraction", "must be in [0,1]");
    if (j.contains("rule_version")) ev.rule_version = r.get<int>(j, where, "rule_version", 2);
    return ev;
  }
  if (type == "expiration") {
    r.check_keys(j, where, {"type", "round", "policy"});
    if (!j.contains("policy")) r.fail(where + ".policy", "required");
    return ExpirationPolicyChange{read_policy(r, j["policy"], where + ".policy")};
  }
  r.fail(where + ".type", "unknown event type '" + type + "' (model_switch | label_revision | expiration)");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j, const std::string& origin = "<config>",
                              const std::filesystem::path& base_dir = std::filesystem::current_path()) {
  detail::ConfigReader r(origin);
  r.check_keys(j, "", {"source", "seed_set_size", "holdout_size", "validation_size", "rounds", "batch_size", "subset_size", "schemes",
                       "events", "trials", "base_seed", "best_of_k", "metric", "initial_model", "train", "kernel_train", "rff", "length_penalty",
                       "expiration", "output_dir", "verbosity"});
  RunConfig rc;
  auto& c = rc.experiment;
  if (!j.contains("source")) r.fail("source", "required");
  c.source = detail::read_source(r, j["source"], base_dir);
  const bool sentences = is_sentence_source(c.source);

  c.seed_set_size = r.count(j, "", "seed_set_size", c.seed_set_size, 1);
  c.holdout_size = r.count(j, "", "holdout_size", c.holdout_size, 1);
  c.validation_size = r.count(j, "", "validation_size", c.validation_size, 0);
  c.rounds = r.count(j, "", "rounds", c.rounds, 1);
  c.batch_size = r.count(j, "", "batch_size", c.batch_size, 1);
  if (j.contains("subset_size") && !j["subset_size"].is_null()) c.subset_size = r.count(j, "", "subset_size", 1, 1);
  c.trials = r.count(j, "", "trials", c.trials, 1);
  c.base_seed = r.get<std::uint64_t>(j, "", "base_seed", c.base_seed);
  c.best_of_k = r.count(j, "", "best_of_k", c.best_of_k, 1);
  c.length_penalty = r.get<double>(j, "", "length_penalty", c.length_penalty);
  c.initial_model = r.kind(j, "", "initial_model", sentences ? ModelKind::token_tagger : ModelKind::logistic);

  const auto metric = r.get<std::string>(j, "", "metric", sentences ? "f1" : "accuracy");
  if (auto m = parse_metric(metric)) c.metric = *m;
  else r.fail("metric", "must be 'accuracy' or 'f1'");

  for (const char* key : {"train", "kernel_train"}) {
    if (!j.contains(key)) continue;
    const auto& t = j[key];
    auto& cfg = std::string(key) == "train" ? c.train : c.kernel_train;
    r.check_keys(t, key, {"learning_rate", "epochs", "l2", "batch_size"});
    cfg.learning_rate = r.get<double>(t, key, "learning_rate", cfg.learning_rate);
    cfg.epochs = static_cast<int>(r.count(t, key, "epochs", static_cast<std::size_t>(cfg.epochs), 1));
    cfg.l2 = r.get<double>(t, key, "l2", cfg.l2);
    cfg.batch_size = r.count(t, key, "batch_size", cfg.batch_size, 1);
    if (!(cfg.learning_rate > 0)) r.fail(std::string(key) + ".learning_rate", "must be > 0");
    if (cfg.l2 < 0) r.fail(std::string(key) + ".l2", "must be >= 0");
  }
  if (j.contains("rff")) {
    const auto& f = j["rff"];
    r.check_keys(f, "rff", {"features", "gamma"});
    c.rff_features = r.count(f, "rff", "features", c.rff_features, 1);
    c.rff_gamma = r.get<double>(f, "rff", "gamma", c.rff_gamma);
    if (!(c.rff_gamma > 0)) r.fail("rff.gamma", "must be > 0");
  }
  if (j.contains("expiration")) c.expiration = detail::read_policy(r, j["expiration"], "expiration");

  if (!j.contains("schemes") || !j["schemes"].is_array() || j["schemes"].empty()) r.fail("schemes", "must be a nonempty list");
  for (std::size_t i = 0; i < j["schemes"].size(); ++i) {
    const auto where = "schemes[" + std::to_string(i) + "]";
    c.schemes.push_back(detail::read_scheme(r, j["schemes"][i], where));
    if (j["schemes"][i].contains("fit")) rc.power_fits.push_back(detail::read_fit(r, j["schemes"][i]["fit"], where + ".fit", i));
  }
  if (j.contains("events")) {
    if (!j["events"].is_array()) r.fail("events", "must be a list");
    for (std::size_t i = 0; i < j["events"].size(); ++i) {
      int round = 0;
      auto ev = detail::read_event(r, j["events"][i], "events[" + std::to_string(i) + "]", round);
      c.events.events.push_back({round, std::move(ev)});
    }
  }
  rc.output_dir = r.get<std::string>(j, "", "output_dir", "");
  rc.verbosity = r.get<int>(j, "", "verbosity", 1);

  try {
    validate(c);
  } catch (const config_error& e) {
    throw config_validation_error(origin + ": " + e.what());
  }
  return rc;
}

inline nlohmann::json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_file_missing("cannot read config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw config_parse_error(path + ": malformed JSON: " + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  return parse_config(read_config_document(path), path, std::filesystem::absolute(path).parent_path());
}

}  // namespace alsim
