#pragma once

// Selection strategies: margin scores (example and sentence level), the
// length penalty, ranked and passive batch selection, and the power-law
// weighted two-model ensemble with its grid-search fit.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "alsim/common.hpp"
#include "alsim/models.hpp"

namespace alsim {

constexpr double probability_tolerance = 1e-6;

namespace detail {

inline void check_distribution(std::span<const double> probs) {
  if (probs.size() < 2) throw precondition_error("probability vector needs at least 2 entries");
  double sum = 0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw precondition_error("probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > probability_tolerance) throw precondition_error("probabilities must sum to 1");
}

}  // namespace detail

// p1 - p2 of the sorted vector.
inline double margin_score(std::span<const double> probs) {
  detail::check_distribution(probs);
  double first = -1, second = -1;
  for (double p : probs) {
    if (p > first) {
      second = first;
      first = p;
    } else if (p > second) {
      second = p;
    }
  }
  return std::clamp(first - second, 0.0, 1.0);
}

// Sequence-level margin under token independence. The best joint labeling
// takes the likelier label at every token; the runner-up flips the single
// token whose (second / best) ratio is largest.
inline double sentence_margin(std::span<const std::array<double, 2>> tokens) {
  if (tokens.empty()) throw precondition_error("sentence_margin: empty sentence");
  double p1 = 1.0, worst_ratio = 0.0;
  for (const auto& q : tokens) {
    detail::check_distribution(q);
    const double hi = std::max(q[0], q[1]), lo = std::min(q[0], q[1]);
    p1 *= hi;
    worst_ratio = std::max(worst_ratio, lo / hi);
  }
  return std::clamp(p1 * (1.0 - worst_ratio), 0.0, 1.0);
}

inline double penalized_margin(double margin, std::size_t length, double lambda) {
  require(length >= 1, "penalized_margin: length must be >= 1");
  return margin * std::pow(static_cast<double>(length), lambda);
}

struct ScoredId {
  std::int64_t id;
  double score;
};

// Ranks by ascending score (ties by ascending id) and returns the first
// `batch_size`. With `subset_size`, a uniform subset of the pool is drawn
// first and only that is scored. The pool is sorted before the draw so the
// result does not depend on presentation order.
template <class Scorer>
std::vector<ScoredId> select_batch_scored(std::span<const std::int64_t> pool, Scorer&& score, std::size_t batch_size,
                                          std::optional<std::size_t> subset_size, std::uint64_t seed) {
  if (pool.empty()) throw precondition_error("select_batch: empty pool");
  require(batch_size >= 1, "select_batch: batch_size must be >= 1");
  std::vector<std::int64_t> ids(pool.begin(), pool.end());
  std::sort(ids.begin(), ids.end());
  if (subset_size && *subset_size < ids.size()) {
    require(*subset_size >= batch_size, "select_batch: subset_size must be >= batch_size");
    ids = sample_without_replacement(std::move(ids), *subset_size, seed);
  }
  if (batch_size > ids.size())
    throw precondition_error("select_batch: batch of " + std::to_string(batch_size) + " exceeds pool of " + std::to_string(ids.size()));

  std::vector<ScoredId> scored;
  scored.reserve(ids.size());
  for (auto id : ids) scored.push_back({id, static_cast<double>(score(id))});
  auto less = [](const ScoredId& a, const ScoredId& b) { return a.score < b.score || (a.score == b.score && a.id < b.id); };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(batch_size), scored.end(), less);
  scored.resize(batch_size);
  return scored;
}

template <class Scorer>
std::vector<std::int64_t> select_batch(std::span<const std::int64_t> pool, Scorer&& score, std::size_t batch_size,
                                       std::optional<std::size_t> subset_size, std::uint64_t seed) {
  std::vector<std::int64_t> out;
  for (const auto& s : select_batch_scored(pool, std::forward<Scorer>(score), batch_size, subset_size, seed)) out.push_back(s.id);
  return out;
}

// Uniform without replacement, in draw order.
inline std::vector<std::int64_t> passive_select(std::span<const std::int64_t> pool, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size > pool.size())
    throw precondition_error("passive_select: batch of " + std::to_string(batch_size) + " exceeds pool of " + std::to_string(pool.size()));
  std::vector<std::int64_t> ids(pool.begin(), pool.end());
  std::sort(ids.begin(), ids.end());
  return sample_without_replacement(std::move(ids), batch_size, seed);
}

// ---------------------------------------------------------------------------
// Power-law ensemble weights

struct PowerPiece {
  double t_start = 0;  // cumulative training size where this piece takes over
  double a = 0, b = 0, alpha = 1;
  bool operator==(const PowerPiece&) const = default;
};

// Weight on the simpler model (the incumbent class); the complex model gets
// 1 - w.
struct PowerSchedule {
  std::vector<PowerPiece> pieces;
  bool operator==(const PowerSchedule&) const = default;
};

inline void validate(const PowerSchedule& s) {
  if (s.pieces.empty()) throw precondition_error("power schedule has no pieces");
  for (std::size_t i = 1; i < s.pieces.size(); ++i)
    if (!(s.pieces[i].t_start > s.pieces[i - 1].t_start)) throw precondition_error("power schedule t_start must be strictly increasing");
}

// a + b t^alpha from the piece with the largest t_start <= t (the first piece
// below its own start), clamped to [0,1].
inline double power_weight(double t, const PowerSchedule& s) {
  validate(s);
  require(t >= 0, "power_weight: t must be >= 0");
  const PowerPiece* piece = &s.pieces.front();
  for (const auto& p : s.pieces)
    if (p.t_start <= t) piece = &p;
  double w = piece->a;
  if (piece->b != 0.0) w += piece->b * std::pow(t, piece->alpha);
  if (std::isnan(w)) w = 0.0;
  return std::clamp(w, 0.0, 1.0);
}

// Margin of the weighted average of class-probability vectors.
inline double ensemble_margin(std::span<const std::vector<double>> probs, std::span<const double> weights) {
  if (probs.empty() || probs.size() != weights.size()) throw precondition_error("ensemble: models and weights must have equal, nonzero length");
  double wsum = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw precondition_error("ensemble: weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > probability_tolerance) throw precondition_error("ensemble: weights must sum to 1");
  std::vector<double> avg(probs.front().size(), 0.0);
  for (std::size_t m = 0; m < probs.size(); ++m) {
    if (probs[m].size() != avg.size()) throw precondition_error("ensemble: class counts differ");
    for (std::size_t c = 0; c < avg.size(); ++c) avg[c] += weights[m] * probs[m][c];
  }
  return margin_score(avg);
}

inline double ensemble_score(std::span<const ProbabilisticClassifier* const> models, std::span<const double> weights, const Example& x) {
  std::vector<std::vector<double>> probs;
  probs.reserve(models.size());
  for (const auto* m : models) probs.push_back(m->predict_proba(x));
  return ensemble_margin(probs, weights);
}

// One piece's candidate values; t_start is fixed per piece.
struct PieceGrid {
  double t_start = 0;
  std::vector<std::tuple<double, double, double>> candidates;  // (a, b, alpha)
};

struct PowerFit {
  PowerSchedule schedule;
  double objective = 0;
  std::size_t evaluated = 0;
};

// Exhaustive search over the product of per-piece candidates. Candidates
// are visited in lexicographic order of the concatenated (a, b, alpha)
// tuple and only a strictly better objective replaces the incumbent, so ties
// resolve to the lexicographically smallest schedule.
template <class Objective>
PowerFit fit_power_schedule(std::vector<PieceGrid> grid, Objective&& objective) {
  if (grid.empty()) throw precondition_error("fit_power_schedule: empty grid");
  for (auto& g : grid) {
    if (g.candidates.empty()) throw precondition_error("fit_power_schedule: a piece has no candidates");
    std::sort(g.candidates.begin(), g.candidates.end());
  }
  std::vector<std::size_t> idx(grid.size(), 0);
  std::optional<PowerFit> best;
  std::size_t evaluated = 0;
  while (true) {
    PowerSchedule s;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto& [a, b, alpha] = grid[p].candidates[idx[p]];
      s.pieces.push_back({grid[p].t_start, a, b, alpha});
    }
    validate(s);
    const double v = objective(static_cast<const PowerSchedule&>(s));
    ++evaluated;
    if (!best || v > best->objective) best = PowerFit{std::move(s), v, 0};

    // Odometer increment, last piece fastest.
    std::size_t p = grid.size();
    while (p > 0) {
      --p;
      if (++idx[p] < grid[p].candidates.size()) break;
      idx[p] = 0;
      if (p == 0) {
        best->evaluated = evaluated;
        return std::move(*best);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Scheme configuration

enum class SchemeKind { passive, margin_pure, margin_naive_adaptive, margin_power };

inline const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::passive: return "passive";
    case SchemeKind::margin_pure: return "margin_pure";
    case SchemeKind::margin_naive_adaptive: return "margin_naive_adaptive";
    case SchemeKind::margin_power: return "margin_power";
  }
  return "?";
}

struct SchemeConfig {
  std::string name;
  SchemeKind kind = SchemeKind::passive;
  ModelKind scorer = ModelKind::logistic;  // margin_pure only
  // margin_power: the weight goes to `simple_model`, 1 - w to `complex_model`.
  PowerSchedule schedule;
  ModelKind simple_model = ModelKind::logistic;
  ModelKind complex_model = ModelKind::kernel_logistic;
  // Per-scheme overrides of the experiment-wide values.
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> subset_size;
  std::optional<double> length_penalty;
};

inline std::string default_scheme_name(const SchemeConfig& s) {
  switch (s.kind) {
    case SchemeKind::passive: return "passive";
    case SchemeKind::margin_pure: return std::string("margin-") + to_string(s.scorer);
    case SchemeKind::margin_naive_adaptive: return "margin-naive_adaptive";
    case SchemeKind::margin_power: return "margin-power";
  }
  return "?";
}

}  // namespace alsim
