#pragma once

// Data model, SVMlight ingestion, pool/holdout splitting, the synthetic
// two-domain segmentation corpus, and label revision / expiration mechanics.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "alsim/common.hpp"

namespace alsim {

struct Feature {
  std::uint32_t index = 0;  // 1-based, as in the file format
  double value = 0.0;
  bool operator==(const Feature&) const = default;
};

using SparseVector = std::vector<Feature>;

struct Example {
  std::int64_t id = 0;
  SparseVector features;
  int label = 0;
  std::optional<std::string> domain;
  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  std::vector<double> class_values;  // native label of class k, ascending
  std::uint32_t max_feature_index = 0;

  std::size_t size() const noexcept { return examples.size(); }
  int num_classes() const noexcept { return static_cast<int>(class_values.size()); }
  bool empty() const noexcept { return examples.empty(); }
};

// ---------------------------------------------------------------------------
// SVMlight / libsvm text format

namespace detail {

inline std::optional<double> to_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // std::from_chars for double is available in libstdc++ 11.
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::uint32_t> to_index(std::string_view s) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

}  // namespace detail

// Parses `<label> <idx>:<val> ...` lines. Blank lines and `#` comments are
// skipped; example ids are 1-based line numbers. Native labels are remapped
// to 0..K-1 by ascending native value.
inline Dataset parse_svmlight(std::istream& in) {
  struct Raw {
    std::int64_t line;
    double native;
    SparseVector features;
  };
  std::vector<Raw> rows;
  std::string line;
  std::size_t lineno = 0;
  std::uint32_t max_index = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;

    auto label = detail::to_double(tok);
    if (!label) throw parse_error(lineno, "bad label '" + tok + "'");

    Raw row{static_cast<std::int64_t>(lineno), *label, {}};
    while (tokens >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos) throw parse_error(lineno, "expected idx:val, got '" + tok + "'");
      auto idx = detail::to_index(std::string_view(tok).substr(0, colon));
      auto val = detail::to_double(std::string_view(tok).substr(colon + 1));
      if (!idx || *idx == 0) throw parse_error(lineno, "bad feature index in '" + tok + "'");
      if (!val) throw parse_error(lineno, "bad feature value in '" + tok + "'");
      if (!row.features.empty() && row.features.back().index >= *idx)
        throw parse_error(lineno, "feature indices not strictly increasing at '" + tok + "'");
      row.features.push_back({*idx, *val});
      max_index = std::max(max_index, *idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw data_error("empty SVMlight input");

  Dataset ds;
  for (const auto& r : rows) ds.class_values.push_back(r.native);
  std::sort(ds.class_values.begin(), ds.class_values.end());
  ds.class_values.erase(std::unique(ds.class_values.begin(), ds.class_values.end()), ds.class_values.end());
  ds.max_feature_index = max_index;
  ds.examples.reserve(rows.size());
  for (auto& r : rows) {
    auto it = std::lower_bound(ds.class_values.begin(), ds.class_values.end(), r.native);
    ds.examples.push_back({r.line, std::move(r.features), static_cast<int>(it - ds.class_values.begin()), std::nullopt});
  }
  return ds;
}

inline Dataset parse_svmlight_text(const std::string& text) {
  std::istringstream in(text);
  return parse_svmlight(in);
}

inline Dataset load_svmlight_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file '" + path + "'");
  return parse_svmlight(in);
}

// Writes native label values, so parse(write(ds)) reproduces ds for any
// dataset whose ids are its line numbers.
inline void write_svmlight(std::ostream& out, const Dataset& ds) {
  for (const auto& ex : ds.examples) {
    out << detail::format_double(ds.class_values.at(static_cast<std::size_t>(ex.label)));
    for (const auto& f : ex.features) out << ' ' << f.index << ':' << detail::format_double(f.value);
    out << '\n';
  }
}

// Divides every feature by its largest absolute value, keeping sparsity.
inline Dataset scale_max_abs(Dataset ds) {
  std::vector<double> scale(ds.max_feature_index + 1, 0.0);
  for (const auto& ex : ds.examples)
    for (const auto& f : ex.features) scale[f.index] = std::max(scale[f.index], std::abs(f.value));
  for (auto& ex : ds.examples)
    for (auto& f : ex.features)
      if (scale[f.index] > 0) f.value /= scale[f.index];
  return ds;
}

inline Dataset with_examples(const Dataset& like, std::vector<Example> examples) {
  Dataset out;
  out.examples = std::move(examples);
  out.class_values = like.class_values;
  out.max_feature_index = like.max_feature_index;
  return out;
}

// Uniform subsample without replacement, kept in original order.
inline Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  require(n >= 1 && n <= ds.size(), "subsample size out of range");
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto keep = sample_without_replacement(std::move(idx), n, seed);
  std::sort(keep.begin(), keep.end());
  std::vector<Example> out;
  out.reserve(n);
  for (auto i : keep) out.push_back(ds.examples[i]);
  return with_examples(ds, std::move(out));
}

struct PoolHoldoutSplit {
  Dataset pool;
  Dataset holdout;
};

// Holdout drawn uniformly without replacement; both parts keep file order.
inline PoolHoldoutSplit split_pool_holdout(const Dataset& ds, std::size_t holdout_size, std::uint64_t seed) {
  if (holdout_size == 0 || holdout_size >= ds.size())
    throw precondition_error("holdout_size must be in [1, " + std::to_string(ds.size()) + ")");
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto drawn = sample_without_replacement(std::move(idx), holdout_size, seed);
  std::vector<char> in_holdout(ds.size(), 0);
  for (auto i : drawn) in_holdout[i] = 1;

  std::vector<Example> pool, holdout;
  pool.reserve(ds.size() - holdout_size);
  holdout.reserve(holdout_size);
  for (std::size_t i = 0; i < ds.size(); ++i) (in_holdout[i] ? holdout : pool).push_back(ds.examples[i]);
  return {with_examples(ds, std::move(pool)), with_examples(ds, std::move(holdout))};
}

// Stand-in with the covtype.binary layout: 10 continuous columns, a 4-way
// and a 40-way one-hot group, binary labels from a nonlinear boundary with
// a little label noise. Values are already in [-1, 1].
inline Dataset generate_covtype_like(std::size_t n, std::uint64_t seed) {
  require(n >= 1, "covtype-like generator needs n >= 1");
  rng_t rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Per-soil-type offsets give the one-hot block real signal.
  rng_t soil_rng(derive_seed(seed, {hash_tag("soil")}));
  std::array<double, 40> soil_effect{};
  for (auto& s : soil_effect) s = 2.0 * (uniform01(soil_rng) - 0.5);

  Dataset ds;
  ds.class_values = {1.0, 2.0};
  ds.max_feature_index = 54;
  ds.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 10> z{};
    for (auto& v : z) v = gauss(rng);
    // Correlate a few columns the way elevation/hydrology columns are.
    z[1] = 0.6 * z[0] + 0.8 * z[1];
    z[5] = 0.5 * z[0] + 0.866 * z[5];

    const int wilderness = static_cast<int>(std::min(3.0, std::floor(4.0 * sigmoid(0.9 * z[0] + 0.7 * gauss(rng)))));
    // Soil types within a block are far from uniform, as in covtype.
    std::geometric_distribution<int> soil_in_block(0.25);
    const int soil = wilderness * 10 + std::min(9, soil_in_block(rng));

    // Nonlinear score: a ring in (z0, z1), an interaction, a soft bump, and
    // a linear part (z0 plays elevation) that a logistic model can pick up.
    const double ring = z[0] * z[0] + z[1] * z[1] - 1.6;
    const double linear = z[5] - 0.667 * z[6] + 0.6 * z[0] + 0.3 * z[7];
    const double score = 1.1 * ring - 1.2 * z[2] * z[3] + 1.5 * std::exp(-(z[4] - 1.0) * (z[4] - 1.0)) + 1.2 * linear +
                         soil_effect[static_cast<std::size_t>(soil)] + 0.35 * (wilderness - 1.5) - 0.4;
    int label = score > 0 ? 1 : 0;
    if (uniform01(rng) < 0.05) label = 1 - label;

    Example ex;
    ex.id = static_cast<std::int64_t>(i + 1);
    ex.label = label;
    for (std::uint32_t j = 0; j < 10; ++j) {
      const double v = std::tanh(0.5 * z[j]);
      if (v != 0.0) ex.features.push_back({j + 1, v});
    }
    ex.features.push_back({static_cast<std::uint32_t>(11 + wilderness), 1.0});
    ex.features.push_back({static_cast<std::uint32_t>(15 + soil), 1.0});
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic segmentation corpus

enum class Domain : std::uint8_t { A, B };

inline const char* to_string(Domain d) { return d == Domain::A ? "A" : "B"; }

enum class TokenCategory : std::uint8_t { plain, strong, compound };

struct Token {
  std::uint32_t word = 0;
  TokenCategory category = TokenCategory::plain;
  bool operator==(const Token&) const = default;
};

struct TokenSentence {
  std::int64_t id = 0;
  std::vector<Token> tokens;
  std::vector<std::uint8_t> labels;  // 1 = break after this token
  Domain domain = Domain::A;

  std::size_t length() const noexcept { return tokens.size(); }
  bool operator==(const TokenSentence&) const = default;
};

struct DomainProfile {
  double mean_length = 8.0;  // lengths are 1 + Poisson(mean_length - 1)
  double strong_prob = 0.12;
  double compound_prob = 0.25;
};

struct SegmentationConfig {
  std::size_t n_sentences = 1000;
  double domain_mix = 0.5;  // probability a sentence is from domain A
  DomainProfile domain_a{8.0, 0.12, 0.25};
  DomainProfile domain_b{13.0, 0.12, 0.25};
  std::uint32_t vocab_size = 600;
  int rule_version = 1;
};

// Version 1 breaks after strong delimiters only. Version 2 also splits
// compound runs: a break after a compound token followed by another one.
inline std::vector<std::uint8_t> segmentation_labels(const std::vector<Token>& tokens, int rule_version) {
  require(rule_version == 1 || rule_version == 2, "rule_version must be 1 or 2");
  std::vector<std::uint8_t> labels(tokens.size(), 0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t].category == TokenCategory::strong) labels[t] = 1;
    if (rule_version == 2 && t + 1 < tokens.size() && tokens[t].category == TokenCategory::compound &&
        tokens[t + 1].category == TokenCategory::compound)
      labels[t] = 1;
  }
  return labels;
}

namespace detail {

// Vocabulary is partitioned into category blocks so a word determines its
// category: [0, n_strong) strong, then compound, then plain.
struct VocabBlocks {
  std::uint32_t strong_end, compound_end, size;
};

inline VocabBlocks vocab_blocks(std::uint32_t vocab_size) {
  const std::uint32_t n_strong = std::max<std::uint32_t>(1, vocab_size / 10);
  const std::uint32_t n_compound = std::max<std::uint32_t>(1, vocab_size / 4);
  return {n_strong, n_strong + n_compound, vocab_size};
}

}  // namespace detail

inline std::vector<TokenSentence> generate_segmentation_corpus(const SegmentationConfig& cfg, std::uint64_t seed) {
  if (cfg.n_sentences == 0) throw config_error("segmentation corpus: n_sentences must be > 0");
  if (cfg.vocab_size < 3) throw config_error("segmentation corpus: vocab_size must be >= 3");
  if (!(cfg.domain_mix > 0.0 && cfg.domain_mix < 1.0)) throw config_error("segmentation corpus: domain_mix must be in (0,1)");
  for (const auto* p : {&cfg.domain_a, &cfg.domain_b}) {
    if (!(p->mean_length >= 1.0)) throw config_error("segmentation corpus: mean_length must be >= 1");
    if (p->strong_prob < 0 || p->compound_prob < 0 || p->strong_prob + p->compound_prob > 1)
      throw config_error("segmentation corpus: category probabilities must be in [0,1] and sum <= 1");
  }
  const auto blocks = detail::vocab_blocks(cfg.vocab_size);

  std::vector<TokenSentence> corpus;
  corpus.reserve(cfg.n_sentences);
  for (std::size_t i = 0; i < cfg.n_sentences; ++i) {
    // One stream per sentence keeps generation order-independent.
    rng_t rng(derive_seed(seed, {hash_tag("sentence"), i}));
    TokenSentence s;
    s.id = static_cast<std::int64_t>(i + 1);
    s.domain = uniform01(rng) < cfg.domain_mix ? Domain::A : Domain::B;
    const auto& prof = s.domain == Domain::A ? cfg.domain_a : cfg.domain_b;
    std::poisson_distribution<int> extra(prof.mean_length - 1.0);
    const int len = 1 + (prof.mean_length > 1.0 ? extra(rng) : 0);
    s.tokens.reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
      const double u = uniform01(rng);
      Token tok;
      std::uint32_t lo = blocks.compound_end, hi = blocks.size;
      if (u < prof.strong_prob) {
        tok.category = TokenCategory::strong;
        lo = 0;
        hi = blocks.strong_end;
      } else if (u < prof.strong_prob + prof.compound_prob) {
        tok.category = TokenCategory::compound;
        lo = blocks.strong_end;
        hi = blocks.compound_end;
      }
      tok.word = lo + static_cast<std::uint32_t>(uniform01(rng) * (hi - lo));
      s.tokens.push_back(tok);
    }
    s.labels = segmentation_labels(s.tokens, cfg.rule_version);
    corpus.push_back(std::move(s));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Labeled sets, revision and expiration

template <class Item>
struct LabeledEntry {
  Item item;
  int acquisition_round = -1;  // -1 for the common seed set
  int generation = 0;
  bool operator==(const LabeledEntry&) const = default;
};

template <class Item>
struct LabeledSet {
  std::vector<LabeledEntry<Item>> entries;
  int generation = 0;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  void add(Item item, int round) {
    if (!entries.empty() && entries.back().acquisition_round > round)
      throw precondition_error("acquisition rounds must be non-decreasing");
    entries.push_back({std::move(item), round, generation});
  }
  bool operator==(const LabeledSet&) const = default;
};

inline std::int64_t item_id(const Example& e) { return e.id; }
inline std::int64_t item_id(const TokenSentence& s) { return s.id; }

// Selects exactly round(target_fraction * n) entries: those with the smallest
// hash(seed, id). The flip pattern per entry is also a function of
// (seed, id), so a second application flips the same labels back.
struct RevisionRule {
  double target_fraction = 0.0;
  // Probability that each token other than the always-flipped one also
  // flips (sentences only).
  double extra_token_flip_prob = 0.1;
};

struct RevisionStats {
  double sentences_touched_fraction = 0.0;
  std::size_t entries_touched = 0;
  std::size_t labels_flipped_count = 0;
};

template <class Item>
struct RevisionResult {
  LabeledSet<Item> revised;
  RevisionStats stats;
};

namespace detail {

inline std::size_t flip_labels(Example& ex, std::uint64_t key, const RevisionRule&, int num_classes) {
  (void)key;
  ex.label = (num_classes - 1) - ex.label;
  return 1;
}

inline std::size_t flip_labels(TokenSentence& s, std::uint64_t key, const RevisionRule& rule, int) {
  const std::size_t L = s.labels.size();
  const std::size_t anchor = static_cast<std::size_t>(detail::splitmix64(key ^ 0x5bd1e995ULL) % L);
  std::size_t flipped = 0;
  for (std::size_t t = 0; t < L; ++t) {
    const bool flip = t == anchor || hash_uniform(derive_seed(key, {t})) < rule.extra_token_flip_prob;
    if (flip) {
      s.labels[t] ^= 1;
      ++flipped;
    }
  }
  return flipped;
}

}  // namespace detail

template <class Item>
RevisionResult<Item> apply_label_revision(const LabeledSet<Item>& set, const RevisionRule& rule, std::uint64_t seed,
                                          int num_classes = 2) {
  require(!set.empty(), "label revision needs a nonempty labeled set");
  require(rule.target_fraction >= 0.0 && rule.target_fraction <= 1.0, "target_fraction must be in [0,1]");
  const std::size_t n = set.size();
  const auto k = static_cast<std::size_t>(std::llround(rule.target_fraction * static_cast<double>(n)));

  RevisionResult<Item> out{set, {}};
  if (k == 0) return out;

  std::vector<std::pair<std::uint64_t, std::size_t>> ranked(n);
  for (std::size_t i = 0; i < n; ++i)
    ranked[i] = {derive_seed(seed, {static_cast<std::uint64_t>(item_id(set.entries[i].item))}), i};
  std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k - 1), ranked.end());

  out.revised.generation = set.generation + 1;
  for (std::size_t j = 0; j < k; ++j) {
    auto& entry = out.revised.entries[ranked[j].second];
    out.stats.labels_flipped_count += detail::flip_labels(entry.item, ranked[j].first, rule, num_classes);
    entry.generation = out.revised.generation;
  }
  out.stats.entries_touched = k;
  out.stats.sentences_touched_fraction = static_cast<double>(k) / static_cast<double>(n);
  return out;
}

// Expiration. Age = current_round - acquisition_round. The seed set
// (acquisition_round < 0) never expires.
struct HardExpiration {
  std::optional<int> limit_rounds;  // nullopt = no limit
};

struct GradualExpiration {
  // retention[age] = probability an entry of that age survives this round;
  // ages past the end use the last value.
  std::vector<double> retention;
};

using ExpirationPolicy = std::variant<HardExpiration, GradualExpiration>;

template <class Item>
LabeledSet<Item> apply_expiration_limit(const LabeledSet<Item>& set, int current_round, const ExpirationPolicy& policy,
                                        std::uint64_t seed) {
  for (const auto& e : set.entries)
    if (e.acquisition_round > current_round) throw precondition_error("entry acquired after current_round");

  LabeledSet<Item> out;
  out.generation = set.generation;
  if (const auto* hard = std::get_if<HardExpiration>(&policy)) {
    if (hard->limit_rounds && *hard->limit_rounds < 0) throw precondition_error("expiration limit must be >= 0");
    for (const auto& e : set.entries) {
      const int age = current_round - e.acquisition_round;
      if (e.acquisition_round < 0 || !hard->limit_rounds || age <= *hard->limit_rounds) out.entries.push_back(e);
    }
    return out;
  }
  const auto& gradual = std::get<GradualExpiration>(policy);
  require(!gradual.retention.empty(), "gradual expiration needs a retention schedule");
  for (double p : gradual.retention) require(p >= 0.0 && p <= 1.0, "retention probabilities must be in [0,1]");
  for (const auto& e : set.entries) {
    if (e.acquisition_round < 0) {
      out.entries.push_back(e);
      continue;
    }
    const auto age = static_cast<std::size_t>(current_round - e.acquisition_round);
    const double keep = gradual.retention[std::min(age, gradual.retention.size() - 1)];
    const double u = hash_uniform(derive_seed(seed, {static_cast<std::uint64_t>(item_id(e.item)),
                                                     static_cast<std::uint64_t>(current_round)}));
    if (u < keep) out.entries.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Line-delimited JSON snapshots

inline void to_json(nlohmann::json& j, const Example& e) {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : e.features) feats.push_back({f.index, f.value});
  j = {{"id", e.id}, {"label", e.label}, {"features", feats}};
  if (e.domain) j["domain"] = *e.domain;
}

inline void from_json(const nlohmann::json& j, Example& e) {
  e.id = j.at("id").get<std::int64_t>();
  e.label = j.at("label").get<int>();
  e.features.clear();
  for (const auto& f : j.at("features")) e.features.push_back({f.at(0).get<std::uint32_t>(), f.at(1).get<double>()});
  e.domain = j.contains("domain") ? std::optional<std::string>(j["domain"].get<std::string>()) : std::nullopt;
}

inline void to_json(nlohmann::json& j, const TokenSentence& s) {
  nlohmann::json words = nlohmann::json::array(), cats = nlohmann::json::array();
  for (const auto& t : s.tokens) {
    words.push_back(t.word);
    cats.push_back(static_cast<int>(t.category));
  }
  j = {{"id", s.id}, {"domain", to_string(s.domain)}, {"words", words}, {"categories", cats}, {"labels", s.labels}};
}

inline void from_json(const nlohmann::json& j, TokenSentence& s) {
  s.id = j.at("id").get<std::int64_t>();
  const auto dom = j.at("domain").get<std::string>();
  if (dom != "A" && dom != "B") throw data_error("sentence domain must be A or B");
  s.domain = dom == "A" ? Domain::A : Domain::B;
  const auto words = j.at("words").get<std::vector<std::uint32_t>>();
  const auto cats = j.at("categories").get<std::vector<int>>();
  s.labels = j.at("labels").get<std::vector<std::uint8_t>>();
  if (words.empty() || words.size() != cats.size() || words.size() != s.labels.size())
    throw data_error("sentence " + std::to_string(s.id) + ": tokens/labels length mismatch");
  s.tokens.clear();
  for (std::size_t t = 0; t < words.size(); ++t) {
    if (cats[t] < 0 || cats[t] > 2) throw data_error("bad token category");
    s.tokens.push_back({words[t], static_cast<TokenCategory>(cats[t])});
  }
}

template <class Item>
void write_jsonl(std::ostream& out, const std::vector<Item>& items) {
  for (const auto& it : items) out << nlohmann::json(it).dump() << '\n';
}

template <class Item>
std::vector<Item> read_jsonl(std::istream& in) {
  std::vector<Item> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      items.push_back(nlohmann::json::parse(line).get<Item>());
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(lineno, e.what());
    }
  }
  return items;
}

template <class Item>
void write_jsonl(std::ostream& out, const LabeledSet<Item>& set) {
  for (const auto& e : set.entries)
    out << nlohmann::json{{"item", e.item}, {"round", e.acquisition_round}, {"generation", e.generation}}.dump() << '\n';
}

template <class Item>
LabeledSet<Item> read_labeled_jsonl(std::istream& in) {
  LabeledSet<Item> set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      LabeledEntry<Item> e{j.at("item").get<Item>(), j.at("round").get<int>(), j.at("generation").get<int>()};
      set.generation = std::max(set.generation, e.generation);
      set.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(lineno, e.what());
    }
  }
  return set;
}

}  // namespace alsim
