#pragma once

// Evaluation metrics, learning-curve aggregation, sampling gains,
// discounting, half-sampling variance and batch composition diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alsim/common.hpp"
#include "alsim/dataset.hpp"
#include "alsim/models.hpp"

namespace alsim {

enum class Metric { accuracy, f1 };

inline const char* to_string(Metric m) { return m == Metric::accuracy ? "accuracy" : "f1"; }

inline std::optional<Metric> parse_metric(std::string_view s) {
  if (s == "accuracy") return Metric::accuracy;
  if (s == "f1") return Metric::f1;
  return std::nullopt;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(bool predicted_positive, bool actually_positive) {
    if (predicted_positive) (actually_positive ? tp : fp)++;
    else (actually_positive ? fn : tn)++;
  }
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

// F1 = 2PR / (P + R), 0 when P + R = 0.
inline double f1_score(const Confusion& c) {
  const double p = (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  const double r = (c.tp + c.fn) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
}

inline double f1_from_precision_recall(double p, double r) { return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0; }

inline int argmax_class(const std::vector<double>& probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

// Accuracy over examples, or F1 with class 1 as the positive class.
inline double evaluate(const ProbabilisticClassifier& model, std::span<const Example> holdout, Metric metric) {
  if (holdout.empty()) throw precondition_error("evaluate: empty holdout");
  Confusion c;
  std::size_t correct = 0;
  for (const auto& ex : holdout) {
    const int pred = argmax_class(model.predict_proba(ex));
    correct += pred == ex.label;
    c.add(pred == 1, ex.label == 1);
  }
  return metric == Metric::accuracy ? static_cast<double>(correct) / static_cast<double>(holdout.size()) : f1_score(c);
}

// Token-level accuracy or F1 with "break" as the positive class.
inline double evaluate(const ProbabilisticClassifier& model, std::span<const TokenSentence> holdout, Metric metric) {
  if (holdout.empty()) throw precondition_error("evaluate: empty holdout");
  Confusion c;
  for (const auto& s : holdout) {
    const auto probs = model.predict_proba(s);
    for (std::size_t t = 0; t < s.length(); ++t) c.add(probs[t][1] > probs[t][0], s.labels[t] == 1);
  }
  return metric == Metric::accuracy ? static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) : f1_score(c);
}

// ---------------------------------------------------------------------------
// Learning curves

struct CurvePoint {
  std::int64_t training_size = 0;
  double value = 0.0;
  bool operator==(const CurvePoint&) const = default;
};

struct LearningCurve {
  std::vector<CurvePoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool operator==(const LearningCurve&) const = default;
};

inline void validate(const LearningCurve& c) {
  for (std::size_t i = 1; i < c.points.size(); ++i)
    if (c.points[i].training_size <= c.points[i - 1].training_size)
      throw precondition_error("learning curve training sizes must be strictly increasing");
}

struct AggregateCurve {
  std::vector<std::int64_t> training_sizes;
  std::vector<double> mean;
  // Normal-approximation 95% band: mean +- 1.96 * s / sqrt(n). Absent for n = 1.
  std::optional<std::vector<double>> lower, upper;
  std::size_t n_curves = 0;
};

constexpr double z95 = 1.96;

inline AggregateCurve aggregate_curves(std::span<const LearningCurve> curves) {
  require(!curves.empty(), "aggregate_curves: no curves");
  const auto& ref = curves.front();
  for (const auto& c : curves) {
    if (c.size() != ref.size()) throw precondition_error("aggregate_curves: curves have different lengths");
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.points[i].training_size != ref.points[i].training_size)
        throw precondition_error("aggregate_curves: training-size grids differ");
  }
  AggregateCurve out;
  out.n_curves = curves.size();
  const double n = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double sum = 0;
    for (const auto& c : curves) sum += c.points[i].value;
    out.training_sizes.push_back(ref.points[i].training_size);
    out.mean.push_back(sum / n);
  }
  if (curves.size() >= 2) {
    out.lower.emplace();
    out.upper.emplace();
    for (std::size_t i = 0; i < ref.size(); ++i) {
      double ss = 0;
      for (const auto& c : curves) ss += (c.points[i].value - out.mean[i]) * (c.points[i].value - out.mean[i]);
      const double half = z95 * std::sqrt(ss / (n - 1)) / std::sqrt(n);
      out.lower->push_back(out.mean[i] - half);
      out.upper->push_back(out.mean[i] + half);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling gains. "Surpass" is strict.

struct Gain {
  double value = 0.0;               // (reference_size - active_size) / reference_size
  std::int64_t active_size = 0;
  std::int64_t reference_size = 0;
};

// Reference: the passive maximum m, at the smallest size attaining it. Active
// size: the latest upward crossing of m (or the first point if it already
// exceeds m).
inline std::optional<Gain> last_vs_max_gain(const LearningCurve& active, const LearningCurve& passive) {
  require(!active.empty() && !passive.empty(), "gain: curves must be nonempty");
  const auto best = std::max_element(passive.points.begin(), passive.points.end(),
                                     [](const CurvePoint& a, const CurvePoint& b) { return a.value < b.value; });
  const double m = best->value;
  std::optional<std::int64_t> crossing;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const bool above = active.points[i].value > m;
    const bool was_below = i == 0 || active.points[i - 1].value <= m;
    if (above && was_below) crossing = active.points[i].training_size;
  }
  if (!crossing) return std::nullopt;
  const auto ref = best->training_size;
  return Gain{static_cast<double>(ref - *crossing) / static_cast<double>(ref), *crossing, ref};
}

// Reference: the final passive point. Active size: the smallest size whose
// value exceeds it.
inline std::optional<Gain> first_vs_final_gain(const LearningCurve& active, const LearningCurve& passive) {
  require(!active.empty() && !passive.empty(), "gain: curves must be nonempty");
  const auto& fin = passive.points.back();
  for (const auto& p : active.points)
    if (p.value > fin.value)
      return Gain{static_cast<double>(fin.training_size - p.training_size) / static_cast<double>(fin.training_size),
                  p.training_size, fin.training_size};
  return std::nullopt;
}

// sum_i rho^i v_i / sum_i rho^i over point index i.
inline double discounted_average(const LearningCurve& curve, double rho) {
  require(!curve.empty(), "discounted_average: empty curve");
  if (!(rho > 0.0 && rho <= 1.0)) throw precondition_error("discounted_average: rho must be in (0,1]");
  double num = 0, den = 0, w = 1.0;
  for (const auto& p : curve.points) {
    num += w * p.value;
    den += w;
    w *= rho;
  }
  return num / den;
}

// ---------------------------------------------------------------------------
// Half-sampling variance

inline int stratum_of(const Example& e) { return e.label; }
inline int stratum_of(const TokenSentence& s) { return static_cast<int>(s.domain); }

namespace detail {

// Complementary halves, stratified: each stratum is shuffled and dealt
// alternately, with the starting half alternating across strata.
template <class Item>
std::pair<std::vector<Item>, std::vector<Item>> stratified_halves(std::span<const Item> items, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < items.size(); ++i) strata[stratum_of(items[i])].push_back(i);
  std::pair<std::vector<Item>, std::vector<Item>> halves;
  std::size_t turn = 0;
  for (auto& [key, idx] : strata) {
    seeded_shuffle(idx, derive_seed(seed, {static_cast<std::uint64_t>(key)}));
    for (auto i : idx) (turn++ % 2 == 0 ? halves.first : halves.second).push_back(items[i]);
  }
  return halves;
}

}  // namespace detail

struct HalfSamplingResult {
  double variance = 0.0;
  std::vector<double> values;  // 2 per pair: (half A, half B)
};

// For each pair: split into complementary stratified halves, train on each
// (`train(half, seed)`), score each with `score(model)`; returns the sample
// variance (n - 1 denominator) of all 2 * n_pairs values.
template <class Item, class Train, class Score>
HalfSamplingResult half_sampling_variance(std::span<const Item> labeled, Train&& train, Score&& score, std::size_t n_pairs,
                                          std::uint64_t seed) {
  require(n_pairs >= 1, "half_sampling_variance: n_pairs must be >= 1");
  require(labeled.size() >= 4, "half_sampling_variance: need at least 4 labeled items");
  if constexpr (std::is_same_v<Item, Example>) {
    std::map<int, std::size_t> counts;
    for (const auto& e : labeled) ++counts[e.label];
    if (counts.size() < 2) throw precondition_error("half_sampling_variance: both classes must be present");
    for (const auto& [label, n] : counts)
      if (n < 2) throw precondition_error("half_sampling_variance: class " + std::to_string(label) + " too small to halve");
  }
  HalfSamplingResult out;
  for (std::size_t pair = 0; pair < n_pairs; ++pair) {
    const auto split_seed = derive_seed(seed, {hash_tag("halves"), pair});
    auto [a, b] = detail::stratified_halves(labeled, split_seed);
    const auto ma = train(std::span<const Item>(a), derive_seed(seed, {hash_tag("train"), pair, 0}));
    const auto mb = train(std::span<const Item>(b), derive_seed(seed, {hash_tag("train"), pair, 1}));
    out.values.push_back(score(ma));
    out.values.push_back(score(mb));
  }
  double mean = 0;
  for (double v : out.values) mean += v;
  mean /= static_cast<double>(out.values.size());
  double ss = 0;
  for (double v : out.values) ss += (v - mean) * (v - mean);
  out.variance = ss / static_cast<double>(out.values.size() - 1);
  return out;
}

// ---------------------------------------------------------------------------
// Batch composition

struct DomainStats {
  std::size_t count = 0;
  double proportion = 0.0;
  std::optional<double> mean_length;  // absent when the domain is not in the batch
};

struct BatchComposition {
  DomainStats a, b;
  double mean_length = 0.0;
  std::size_t size = 0;
};

inline BatchComposition batch_composition(std::span<const TokenSentence> batch) {
  require(!batch.empty(), "batch_composition: empty batch");
  BatchComposition out;
  out.size = batch.size();
  std::size_t len_a = 0, len_b = 0;
  for (const auto& s : batch) {
    if (s.domain == Domain::A) {
      ++out.a.count;
      len_a += s.length();
    } else {
      ++out.b.count;
      len_b += s.length();
    }
  }
  const double n = static_cast<double>(batch.size());
  out.a.proportion = static_cast<double>(out.a.count) / n;
  out.b.proportion = static_cast<double>(out.b.count) / n;
  if (out.a.count) out.a.mean_length = static_cast<double>(len_a) / static_cast<double>(out.a.count);
  if (out.b.count) out.b.mean_length = static_cast<double>(len_b) / static_cast<double>(out.b.count);
  out.mean_length = static_cast<double>(len_a + len_b) / n;
  return out;
}

}  // namespace alsim
