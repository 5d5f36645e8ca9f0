#pragma once

// Round-based pool active learning with an event schedule (model switches,
// label revisions, expiration policy changes) and multi-trial orchestration.
//
// All randomness in a trial is derived from (base_seed, trial, purpose,
// round, ...). Scheme identity is deliberately not part of any stream: two
// schemes whose labeled histories coincide make bit-identical draws and train
// bit-identical models, which is what makes margin-<incumbent> and
// margin-naive_adaptive coincide before the first switch.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "alsim/common.hpp"
#include "alsim/dataset.hpp"
#include "alsim/metrics.hpp"
#include "alsim/models.hpp"
#include "alsim/sampling.hpp"

namespace alsim {

// ---------------------------------------------------------------------------
// Events

struct ModelSwitch {
  ModelKind to = ModelKind::kernel_logistic;
  // Fold every label acquired so far into the (non-expiring) seed set.
  bool reseed = false;
};

struct LabelRevisionEvent {
  RevisionRule rule;
  // Segmentation track only: switch the labeling guideline to this rule
  // version. Relabels the labeled set, the pool oracle and the holdout.
  std::optional<int> rule_version;
};

struct ExpirationPolicyChange {
  ExpirationPolicy policy;
};

using Event = std::variant<ModelSwitch, LabelRevisionEvent, ExpirationPolicyChange>;

struct ScheduledEvent {
  int round = 0;
  Event event;
};

struct EventSchedule {
  std::vector<ScheduledEvent> events;
};

inline void validate(const EventSchedule& s) {
  std::unordered_set<int> switch_rounds;
  for (const auto& e : s.events) {
    if (e.round < 0) throw config_error("events: round must be >= 0");
    if (std::holds_alternative<ModelSwitch>(e.event) && !switch_rounds.insert(e.round).second)
      throw config_error("events: more than one model_switch at round " + std::to_string(e.round));
  }
}

// ---------------------------------------------------------------------------
// Configuration

struct SvmlightSource {
  std::string path;
  std::optional<std::size_t> subsample;
  std::uint64_t subsample_seed = 0;
  bool scale = true;  // max-abs scaling to [-1, 1]
};

struct CovtypeLikeSource {
  std::size_t n = 55000;
  std::uint64_t seed = 0;
};

struct CorpusSource {
  SegmentationConfig config;
  std::uint64_t seed = 0;
};

using DataSource = std::variant<SvmlightSource, CovtypeLikeSource, CorpusSource>;

struct ExperimentConfig {
  DataSource source;
  std::size_t seed_set_size = 1000;
  std::size_t holdout_size = 5000;
  std::size_t validation_size = 0;  // carved from the pool; required when best_of_k > 1
  std::size_t rounds = 14;
  std::size_t batch_size = 500;
  std::optional<std::size_t> subset_size;
  std::vector<SchemeConfig> schemes;
  EventSchedule events;
  std::size_t trials = 1;
  std::uint64_t base_seed = 0;
  std::size_t best_of_k = 1;
  Metric metric = Metric::accuracy;
  ModelKind initial_model = ModelKind::logistic;
  TrainConfig train;  // logistic and token_tagger
  // RFF features have unit norm, so the kernel head wants a larger step.
  TrainConfig kernel_train{.learning_rate = 2.0, .epochs = 10};
  std::size_t rff_features = 512;
  double rff_gamma = 0.5;
  double length_penalty = 0.5;
  ExpirationPolicy expiration = HardExpiration{};
};

inline bool is_sentence_source(const DataSource& s) { return std::holds_alternative<CorpusSource>(s); }

inline std::size_t scheme_batch_size(const ExperimentConfig& c, const SchemeConfig& s) { return s.batch_size.value_or(c.batch_size); }
inline std::optional<std::size_t> scheme_subset_size(const ExperimentConfig& c, const SchemeConfig& s) {
  return s.subset_size ? s.subset_size : c.subset_size;
}

// Structural checks that do not need the data.
inline void validate(const ExperimentConfig& c) {
  if (c.rounds < 1) throw config_error("rounds: must be >= 1");
  if (c.trials < 1) throw config_error("trials: must be >= 1");
  if (c.batch_size < 1) throw config_error("batch_size: must be >= 1");
  if (c.seed_set_size < 1) throw config_error("seed_set_size: must be >= 1");
  if (c.holdout_size < 1) throw config_error("holdout_size: must be >= 1");
  if (c.best_of_k < 1) throw config_error("best_of_k: must be >= 1");
  if (c.best_of_k > 1 && c.validation_size == 0) throw config_error("validation_size: must be > 0 when best_of_k > 1");
  if (c.schemes.empty()) throw config_error("schemes: at least one scheme is required");
  if (c.rff_features < 1) throw config_error("rff_features: must be >= 1");
  if (!(c.rff_gamma > 0)) throw config_error("rff_gamma: must be > 0");
  for (const auto* t : {&c.train, &c.kernel_train})
    if (!(t->learning_rate > 0) || t->epochs < 1 || t->batch_size < 1 || t->l2 < 0)
      throw config_error(std::string(t == &c.train ? "train" : "kernel_train") +
                         ": learning_rate, epochs and batch_size must be positive, l2 >= 0");
  validate(c.events);

  const bool sentences = is_sentence_source(c.source);
  auto check_kind = [&](ModelKind k, const std::string& where) {
    if (sentences != (k == ModelKind::token_tagger))
      throw config_error(where + ": model kind '" + to_string(k) + "' does not fit the " + (sentences ? "segmentation" : "classification") + " track");
  };
  check_kind(c.initial_model, "initial_model");
  std::unordered_set<std::string> names;
  for (const auto& s : c.schemes) {
    const auto name = s.name.empty() ? default_scheme_name(s) : s.name;
    if (!names.insert(name).second) throw config_error("schemes: duplicate scheme name '" + name + "'");
    const auto batch = scheme_batch_size(c, s);
    if (batch < 1) throw config_error("schemes." + name + ".batch_size: must be >= 1");
    if (auto sub = scheme_subset_size(c, s); sub && *sub < batch)
      throw config_error("schemes." + name + ".subset_size: must be >= batch_size");
    if (s.kind == SchemeKind::margin_pure) check_kind(s.scorer, "schemes." + name + ".scorer");
    if (s.kind == SchemeKind::margin_power) {
      if (sentences) throw config_error("schemes." + name + ": margin_power needs two model classes (classification track)");
      check_kind(s.simple_model, "schemes." + name + ".simple_model");
      check_kind(s.complex_model, "schemes." + name + ".complex_model");
      try {
        validate(s.schedule);
      } catch (const precondition_error& e) {
        throw config_error("schemes." + name + ".schedule: " + e.what());
      }
    }
  }
  for (const auto& e : c.events.events) {
    if (const auto* sw = std::get_if<ModelSwitch>(&e.event)) check_kind(sw->to, "events.model_switch.to");
    if (const auto* rv = std::get_if<LabelRevisionEvent>(&e.event)) {
      if (rv->rule_version && !sentences) throw config_error("events.label_revision.rule_version: only valid for the segmentation track");
      if (rv->rule_version && *rv->rule_version != 1 && *rv->rule_version != 2)
        throw config_error("events.label_revision.rule_version: must be 1 or 2");
      if (rv->rule.target_fraction < 0 || rv->rule.target_fraction > 1)
        throw config_error("events.label_revision.fraction: must be in [0,1]");
    }
  }
}

// ---------------------------------------------------------------------------
// Data

using ExperimentData = std::variant<Dataset, std::vector<TokenSentence>>;

inline ExperimentData load_data(const DataSource& source) {
  if (const auto* s = std::get_if<SvmlightSource>(&source)) {
    Dataset ds = load_svmlight_file(s->path);
    if (s->subsample && *s->subsample < ds.size()) ds = subsample(ds, *s->subsample, s->subsample_seed);
    if (s->scale) ds = scale_max_abs(std::move(ds));
    return ds;
  }
  if (const auto* s = std::get_if<CovtypeLikeSource>(&source)) return generate_covtype_like(s->n, s->seed);
  const auto& c = std::get<CorpusSource>(source);
  return generate_segmentation_corpus(c.config, c.seed);
}

// ---------------------------------------------------------------------------
// Results

struct BatchRecord {
  int round = 0;
  std::vector<std::int64_t> ids;
  std::vector<double> raw_margin;        // NaN for passive selections
  std::vector<double> penalized_margin;  // NaN for passive selections
  std::optional<double> simple_weight;   // margin_power only
  std::optional<BatchComposition> composition;  // segmentation track only
};

struct EventRecord {
  int round = 0;
  std::string description;
  std::optional<RevisionStats> revision;
};

struct SchemeTrace {
  std::string scheme;
  LearningCurve curve;  // rounds + 1 points; point 0 is the seed-only model
  std::vector<ModelKind> eval_kinds;      // per curve point
  std::vector<std::size_t> retained_sizes;  // labeled-set size behind each point
  std::vector<BatchRecord> batches;
  std::vector<EventRecord> events;
};

struct TrialResult {
  std::size_t trial_index = 0;
  std::vector<std::int64_t> holdout_ids;
  std::vector<std::int64_t> seed_ids;
  std::vector<SchemeTrace> schemes;

  const SchemeTrace& scheme(const std::string& name) const {
    for (const auto& s : schemes)
      if (s.scheme == name) return s;
    throw precondition_error("no scheme named '" + name + "'");
  }
};

struct ExperimentResult {
  std::vector<TrialResult> trials;
};

struct ProgressLine {
  std::size_t trial = 0;
  std::string scheme;
  int round = 0;  // -1 for the seed-only model
  double metric = 0.0;
  std::size_t batch_size = 0;
  double elapsed_seconds = 0.0;
};

using ProgressSink = std::function<void(const ProgressLine&)>;

// Raised for failures inside a trial; carries where it happened.
struct trial_error : error {
  trial_error(std::size_t trial, const std::string& scheme, int round, const std::string& what)
      : error("trial " + std::to_string(trial) + ", scheme " + scheme + ", round " + std::to_string(round) + ": " + what),
        trial_index(trial) {}
  std::size_t trial_index;
};

// ---------------------------------------------------------------------------
// Trial engine

namespace detail {

inline std::uint64_t purpose_seed(const ExperimentConfig& c, std::size_t trial, std::string_view purpose,
                                  std::initializer_list<std::uint64_t> extra = {}) {
  std::uint64_t s = derive_seed(c.base_seed, {static_cast<std::uint64_t>(trial), hash_tag(purpose)});
  for (auto e : extra) s = derive_seed(s, {e});
  return s;
}

inline std::uint64_t round_tag(int round) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(round) + 1); }

template <class Item>
struct TrialContext {
  TrialContext(const ExperimentConfig& c, std::size_t t) : config(c), trial(t) {}

  const ExperimentConfig& config;
  std::size_t trial;
  int num_classes = 2;
  std::size_t input_dim = 0;
  std::optional<RffParams> rff;

  std::unordered_map<std::int64_t, Item> store;  // pool items by id, labels per rule version 1 / file
  std::vector<std::int64_t> initial_pool;
  std::vector<Item> seed_items;
  std::vector<Item> holdout;
  std::vector<Item> validation;
  std::vector<std::int64_t> holdout_ids;
  mutable std::map<int, std::vector<Item>> holdout_by_version;
  mutable std::map<int, std::vector<Item>> validation_by_version;
  int base_rule_version = 1;

  ProbabilisticClassifier train_once(ModelKind kind, std::span<const Item> data, std::uint64_t seed) const {
    TrainConfig cfg = kind == ModelKind::kernel_logistic ? config.kernel_train : config.train;
    cfg.seed = seed;
    if constexpr (std::is_same_v<Item, Example>) {
      if (kind == ModelKind::logistic) return train_logistic(data, num_classes, input_dim, cfg);
      if (kind == ModelKind::kernel_logistic) return train_kernel_logistic(data, num_classes, *rff, cfg);
      throw precondition_error("token_tagger cannot be trained on sparse examples");
    } else {
      if (kind != ModelKind::token_tagger) throw precondition_error(std::string(to_string(kind)) + " cannot be trained on sentences");
      return train_token_tagger(data, cfg);
    }
  }

  ProbabilisticClassifier train(ModelKind kind, std::span<const Item> data, std::uint64_t seed, int rule_version) const {
    if (config.best_of_k <= 1) return train_once(kind, data, seed);
    const auto& val = validation_set(rule_version);
    require_disjoint_ids(data, val);
    auto result = best_of_k_train([&](std::uint64_t s) { return train_once(kind, data, s); }, config.best_of_k, seed,
                                  [&](const ProbabilisticClassifier& m) { return evaluate(m, std::span<const Item>(val), config.metric); });
    return std::move(result.model);
  }

  static std::vector<Item> relabeled(std::vector<Item> items, int version) {
    if constexpr (std::is_same_v<Item, TokenSentence>)
      for (auto& s : items) s.labels = segmentation_labels(s.tokens, version);
    return items;
  }

  const std::vector<Item>& holdout_set(int version) const {
    auto it = holdout_by_version.find(version);
    if (it == holdout_by_version.end()) it = holdout_by_version.emplace(version, relabeled(holdout, version)).first;
    return it->second;
  }

  const std::vector<Item>& validation_set(int version) const {
    auto it = validation_by_version.find(version);
    if (it == validation_by_version.end()) it = validation_by_version.emplace(version, relabeled(validation, version)).first;
    return it->second;
  }

  Item reveal(std::int64_t id, int version) const {
    Item item = store.at(id);
    if constexpr (std::is_same_v<Item, TokenSentence>)
      if (version != base_rule_version) item.labels = segmentation_labels(item.tokens, version);
    return item;
  }
};

template <class Item>
TrialContext<Item> make_context(const ExperimentConfig& c, const std::vector<Item>& items, std::size_t trial, int num_classes,
                                std::size_t input_dim) {
  TrialContext<Item> ctx(c, trial);
  ctx.num_classes = num_classes;
  ctx.input_dim = input_dim;

  const std::size_t needed = c.holdout_size + c.validation_size + c.seed_set_size;
  if (needed >= items.size())
    throw config_error("holdout_size + validation_size + seed_set_size (" + std::to_string(needed) + ") must be below the data size (" +
                       std::to_string(items.size()) + ")");

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  auto holdout_idx = sample_without_replacement(order, c.holdout_size, purpose_seed(c, trial, "holdout"));
  std::sort(holdout_idx.begin(), holdout_idx.end());
  std::vector<char> taken(items.size(), 0);
  for (auto i : holdout_idx) {
    taken[i] = 1;
    ctx.holdout.push_back(items[i]);
    ctx.holdout_ids.push_back(item_id(items[i]));
  }

  auto remaining = [&] {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (!taken[i]) r.push_back(i);
    return r;
  };
  if (c.validation_size > 0) {
    auto val_idx = sample_without_replacement(remaining(), c.validation_size, purpose_seed(c, trial, "validation"));
    std::sort(val_idx.begin(), val_idx.end());
    for (auto i : val_idx) {
      taken[i] = 1;
      ctx.validation.push_back(items[i]);
    }
  }
  auto seed_idx = sample_without_replacement(remaining(), c.seed_set_size, purpose_seed(c, trial, "seed_set"));
  std::sort(seed_idx.begin(), seed_idx.end());
  for (auto i : seed_idx) {
    taken[i] = 1;
    ctx.seed_items.push_back(items[i]);
  }
  for (auto i : remaining()) {
    const auto id = item_id(items[i]);
    if (!ctx.store.emplace(id, items[i]).second) throw data_error("duplicate item id " + std::to_string(id));
    ctx.initial_pool.push_back(id);
  }
  std::sort(ctx.initial_pool.begin(), ctx.initial_pool.end());

  if constexpr (std::is_same_v<Item, Example>) {
    ctx.rff.emplace(input_dim, c.rff_features, c.rff_gamma, purpose_seed(c, trial, "rff"));
  }
  return ctx;
}

template <class Item>
class SchemeRunner {
 public:
  SchemeRunner(TrialContext<Item>& ctx, const SchemeConfig& scheme, std::string name, const ProgressSink& progress)
      : ctx_(ctx), cfg_(ctx.config), scheme_(scheme), progress_(progress) {
    trace_.scheme = std::move(name);
    eval_kind_ = cfg_.initial_model;
    policy_ = cfg_.expiration;
    rule_version_ = ctx.base_rule_version;
    pool_ = ctx.initial_pool;
    for (const auto& it : ctx.seed_items) labeled_.add(it, -1);
    cumulative_ = static_cast<std::int64_t>(labeled_.size());
    stamp_ = {-1, 1};
  }

  SchemeTrace run() {
    start_ = std::chrono::steady_clock::now();
    record_point(-1, 0);
    for (int r = 0; r < static_cast<int>(cfg_.rounds); ++r) {
      try {
        apply_events(r);
        apply_expiration(r);
        select_and_reveal(r);
        record_point(r, scheme_batch_size(cfg_, scheme_));
      } catch (const trial_error&) {
        throw;
      } catch (const std::exception& e) {
        throw trial_error(ctx_.trial, trace_.scheme, r, e.what());
      }
    }
    return std::move(trace_);
  }

  // Applies every event scheduled for `round`, in listed order.
  void apply_events(int round) {
    for (const auto& ev : cfg_.events.events) {
      if (ev.round != round) continue;
      if (const auto* sw = std::get_if<ModelSwitch>(&ev.event)) {
        if (sw->to == eval_kind_) {
          log(round, std::string("model_switch to ") + to_string(sw->to) + " (no-op: already current)");
        } else {
          log(round, std::string("model_switch ") + to_string(eval_kind_) + " -> " + to_string(sw->to));
          eval_kind_ = sw->to;
        }
        if (sw->reseed) {
          for (auto& e : labeled_.entries) e.acquisition_round = -1;
          log(round, "reseed: " + std::to_string(labeled_.size()) + " labels folded into the seed set");
        }
      } else if (const auto* rv = std::get_if<LabelRevisionEvent>(&ev.event)) {
        revise(round, *rv);
      } else if (const auto* ex = std::get_if<ExpirationPolicyChange>(&ev.event)) {
        policy_ = ex->policy;
        log(round, "expiration policy changed");
      } else {
        throw precondition_error("unknown event kind");
      }
    }
  }

 private:
  using Stamp = std::pair<int, int>;

  void log(int round, std::string what, std::optional<RevisionStats> stats = std::nullopt) {
    trace_.events.push_back({round, std::move(what), stats});
  }

  void touch(int round) {
    stamp_ = {round, 0};
    models_.clear();
  }

  void revise(int round, const LabelRevisionEvent& rv) {
    if constexpr (std::is_same_v<Item, TokenSentence>) {
      if (rv.rule_version) {
        rule_version_ = *rv.rule_version;
        RevisionStats stats;
        for (auto& e : labeled_.entries) {
          auto labels = segmentation_labels(e.item.tokens, rule_version_);
          std::size_t flips = 0;
          for (std::size_t t = 0; t < labels.size(); ++t) flips += labels[t] != e.item.labels[t];
          if (flips) {
            e.item.labels = std::move(labels);
            e.generation = labeled_.generation + 1;
            ++stats.entries_touched;
            stats.labels_flipped_count += flips;
          }
        }
        if (stats.entries_touched) ++labeled_.generation;
        stats.sentences_touched_fraction = static_cast<double>(stats.entries_touched) / static_cast<double>(labeled_.size());
        log(round, "label_revision: guideline rule v" + std::to_string(rule_version_), stats);
        touch(round);
        return;
      }
    }
    auto result = apply_label_revision(labeled_, rv.rule, purpose_seed(cfg_, ctx_.trial, "revision", {round_tag(round)}), ctx_.num_classes);
    labeled_ = std::move(result.revised);
    log(round, "label_revision: fraction " + detail::format_double(rv.rule.target_fraction), result.stats);
    touch(round);
  }

  void apply_expiration(int round) {
    const auto before = labeled_.size();
    labeled_ = apply_expiration_limit(labeled_, round, policy_, purpose_seed(cfg_, ctx_.trial, "expiration", {round_tag(round)}));
    if (labeled_.size() != before) {
      log(round, "expiration dropped " + std::to_string(before - labeled_.size()) + " labels");
      touch(round);
    }
  }

  const ProbabilisticClassifier& model(ModelKind kind) {
    auto it = models_.find(kind);
    if (it != models_.end()) return it->second;
    std::vector<Item> data;
    data.reserve(labeled_.size());
    for (const auto& e : labeled_.entries) data.push_back(e.item);
    const auto seed = purpose_seed(cfg_, ctx_.trial, "train",
                                   {round_tag(stamp_.first), static_cast<std::uint64_t>(stamp_.second), static_cast<std::uint64_t>(kind)});
    return models_.emplace(kind, ctx_.train(kind, std::span<const Item>(data), seed, rule_version_)).first->second;
  }

  double item_margin(const ProbabilisticClassifier& m, const Item& item) const {
    if constexpr (std::is_same_v<Item, Example>) return margin_score(m.predict_proba(item));
    else return sentence_margin(m.predict_proba(item));
  }

  static std::size_t item_length(const Item& item) {
    if constexpr (std::is_same_v<Item, Example>) return 1;
    else return item.length();
  }

  void select_and_reveal(int round) {
    const auto batch = scheme_batch_size(cfg_, scheme_);
    if (pool_.size() < batch)
      throw precondition_error("pool exhausted: " + std::to_string(pool_.size()) + " items left, batch needs " + std::to_string(batch));
    const double lambda = scheme_.length_penalty.value_or(cfg_.length_penalty);
    const auto subset_seed = purpose_seed(cfg_, ctx_.trial, "subset", {round_tag(round)});

    BatchRecord rec;
    rec.round = round;
    if (scheme_.kind == SchemeKind::passive) {
      rec.ids = passive_select(pool_, batch, purpose_seed(cfg_, ctx_.trial, "passive", {round_tag(round)}));
      rec.raw_margin.assign(rec.ids.size(), std::numeric_limits<double>::quiet_NaN());
      rec.penalized_margin = rec.raw_margin;
    } else {
      std::function<double(const Item&)> raw;
      if (scheme_.kind == SchemeKind::margin_power) {
        const double w = power_weight(static_cast<double>(cumulative_), scheme_.schedule);
        rec.simple_weight = w;
        const auto& simple = model(scheme_.simple_model);
        const auto& complex = model(scheme_.complex_model);
        raw = [&simple, &complex, w](const Item& it) {
          if constexpr (std::is_same_v<Item, Example>) {
            const std::vector<std::vector<double>> probs{simple.predict_proba(it), complex.predict_proba(it)};
            const std::vector<double> weights{w, 1.0 - w};
            return ensemble_margin(probs, weights);
          } else {
            throw precondition_error("margin_power is not available for sentences");
            return 0.0;
          }
        };
      } else {
        const ModelKind kind = scheme_.kind == SchemeKind::margin_pure ? scheme_.scorer : eval_kind_;
        const auto& scorer = model(kind);
        raw = [this, &scorer](const Item& it) { return item_margin(scorer, it); };
      }
      std::unordered_map<std::int64_t, double> raw_by_id;
      auto scored = select_batch_scored(
          pool_,
          [&](std::int64_t id) {
            const auto& it = ctx_.store.at(id);
            const double m = raw(it);
            raw_by_id[id] = m;
            return penalized_margin(m, item_length(it), lambda);
          },
          batch, scheme_subset_size(cfg_, scheme_), subset_seed);
      for (const auto& s : scored) {
        rec.ids.push_back(s.id);
        rec.raw_margin.push_back(raw_by_id.at(s.id));
        rec.penalized_margin.push_back(s.score);
      }
    }

    std::unordered_set<std::int64_t> chosen(rec.ids.begin(), rec.ids.end());
    std::vector<Item> revealed;
    revealed.reserve(rec.ids.size());
    for (auto id : rec.ids) {
      revealed.push_back(ctx_.reveal(id, rule_version_));
      labeled_.add(revealed.back(), round);
    }
    std::erase_if(pool_, [&](std::int64_t id) { return chosen.count(id) > 0; });
    if constexpr (std::is_same_v<Item, TokenSentence>) rec.composition = batch_composition(revealed);
    cumulative_ += static_cast<std::int64_t>(rec.ids.size());
    trace_.batches.push_back(std::move(rec));
    stamp_ = {round, 1};
    models_.clear();
  }

  void record_point(int round, std::size_t batch) {
    const auto& m = model(eval_kind_);
    const double v = evaluate(m, std::span<const Item>(ctx_.holdout_set(rule_version_)), cfg_.metric);
    trace_.curve.points.push_back({cumulative_, v});
    trace_.eval_kinds.push_back(eval_kind_);
    trace_.retained_sizes.push_back(labeled_.size());
    if (progress_) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      progress_({ctx_.trial, trace_.scheme, round, v, batch, elapsed});
    }
  }

  TrialContext<Item>& ctx_;
  const ExperimentConfig& cfg_;
  const SchemeConfig& scheme_;
  const ProgressSink& progress_;
  SchemeTrace trace_;
  LabeledSet<Item> labeled_;
  std::vector<std::int64_t> pool_;
  ModelKind eval_kind_ = ModelKind::logistic;
  ExpirationPolicy policy_;
  int rule_version_ = 1;
  std::int64_t cumulative_ = 0;
  Stamp stamp_;
  std::map<ModelKind, ProbabilisticClassifier> models_;
  std::chrono::steady_clock::time_point start_;
};

template <class Item>
TrialResult run_trial_items(const ExperimentConfig& c, const std::vector<Item>& items, std::size_t trial, int num_classes,
                            std::size_t input_dim, const ProgressSink& progress) {
  auto ctx = make_context(c, items, trial, num_classes, input_dim);
  if (const auto* corpus = std::get_if<CorpusSource>(&c.source)) ctx.base_rule_version = corpus->config.rule_version;
  TrialResult out;
  out.trial_index = trial;
  out.holdout_ids = ctx.holdout_ids;
  for (const auto& s : ctx.seed_items) out.seed_ids.push_back(item_id(s));
  for (const auto& scheme : c.schemes) {
    SchemeRunner<Item> runner(ctx, scheme, scheme.name.empty() ? default_scheme_name(scheme) : scheme.name, progress);
    out.schemes.push_back(runner.run());
  }
  return out;
}

}  // namespace detail

inline TrialResult run_trial(const ExperimentConfig& config, const ExperimentData& data, std::size_t trial_index,
                             const ProgressSink& progress = {}) {
  validate(config);
  if (const auto* ds = std::get_if<Dataset>(&data)) {
    if (is_sentence_source(config.source)) throw config_error("source: sentence config given tabular data");
    return detail::run_trial_items(config, ds->examples, trial_index, ds->num_classes(), ds->max_feature_index + 1, progress);
  }
  if (!is_sentence_source(config.source)) throw config_error("source: tabular config given sentence data");
  return detail::run_trial_items(config, std::get<std::vector<TokenSentence>>(data), trial_index, 2, 0, progress);
}

// Trials run on up to `jobs` threads; results are stored by trial index so
// the outcome does not depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentData& data, std::size_t jobs = 1,
                                       const ProgressSink& progress = {}) {
  validate(config);
  ExperimentResult result;
  result.trials.resize(config.trials);
  std::vector<std::exception_ptr> errors(config.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < config.trials; t = next++) {
      try {
        result.trials[t] = run_trial(config, data, t, progress);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, config.trials));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t t = 0; t < errors.size(); ++t) {
    if (!errors[t]) continue;
    try {
      std::rethrow_exception(errors[t]);
    } catch (const trial_error&) {
      throw;
    } catch (const config_error&) {
      throw;
    } catch (const std::exception& e) {
      throw trial_error(t, "-", -1, e.what());
    }
  }
  return result;
}

// Curves of one scheme across trials.
inline std::vector<LearningCurve> scheme_curves(const ExperimentResult& r, const std::string& scheme) {
  std::vector<LearningCurve> out;
  for (const auto& t : r.trials) out.push_back(t.scheme(scheme).curve);
  return out;
}

// Grid-fits a margin_power schedule: each candidate runs the experiment with
// only that scheme, scored by the mean over trials of the curve average over
// sampling rounds (discount rate rho; rho = 1 is the plain mean).
inline PowerFit fit_power_schedule_by_simulation(const ExperimentConfig& config, const ExperimentData& data, const SchemeConfig& scheme,
                                                 std::vector<PieceGrid> grid, double rho = 1.0, std::size_t jobs = 1) {
  ExperimentConfig probe = config;
  probe.schemes = {scheme};
  probe.schemes.front().kind = SchemeKind::margin_power;
  const auto name = scheme.name.empty() ? default_scheme_name(scheme) : scheme.name;
  return fit_power_schedule(std::move(grid), [&](const PowerSchedule& s) {
    probe.schemes.front().schedule = s;
    const auto res = run_experiment(probe, data, jobs);
    double total = 0;
    for (const auto& t : res.trials) {
      LearningCurve rounds_only{std::vector<CurvePoint>(t.scheme(name).curve.points.begin() + 1, t.scheme(name).curve.points.end())};
      total += discounted_average(rounds_only, rho);
    }
    return total / static_cast<double>(res.trials.size());
  });
}

}  // namespace alsim
