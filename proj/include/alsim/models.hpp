#pragma once

// Probabilistic learners used as scorers and evaluation models.
//
//   logistic         multinomial logistic regression on sparse features
//   kernel_logistic  the same head on random Fourier features (approximate RBF)
//   token_tagger     averaged perceptron over a +-2 token window, margin
//                    calibrated to a break probability with a logistic link
//
// All training is plain mini-batch SGD (perceptron updates for the tagger)
// and bit-reproducible for a fixed TrainConfig::seed.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "alsim/common.hpp"
#include "alsim/dataset.hpp"

namespace alsim {

enum class ModelKind { logistic, kernel_logistic, token_tagger };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::logistic: return "logistic";
    case ModelKind::kernel_logistic: return "kernel_logistic";
    case ModelKind::token_tagger: return "token_tagger";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "logistic") return ModelKind::logistic;
  if (s == "kernel_logistic") return ModelKind::kernel_logistic;
  if (s == "token_tagger") return ModelKind::token_tagger;
  return std::nullopt;
}

struct TrainConfig {
  double learning_rate = 0.1;  // initial rate; decays as lr / (1 + step / steps_per_epoch)
  int epochs = 5;
  double l2 = 1e-4;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
};

struct TrainDiagnostics {
  double final_loss = 0.0;
  int epochs_run = 0;
};

// ---------------------------------------------------------------------------
// Linear softmax head

namespace detail {

inline double dot(const double* w, const SparseVector& x) {
  double s = 0;
  for (const auto& f : x) s += w[f.index] * f.value;
  return s;
}

inline double dot(const double* w, std::span<const double> x) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

inline void axpy(double a, const SparseVector& x, double* w) {
  for (const auto& f : x) w[f.index] += a * f.value;
}

inline void axpy(double a, std::span<const double> x, double* w) {
  for (std::size_t i = 0; i < x.size(); ++i) w[i] += a * x[i];
}

inline std::size_t input_width(const SparseVector& x) { return x.empty() ? 0 : x.back().index + 1; }
inline std::size_t input_width(std::span<const double> x) { return x.size(); }

}  // namespace detail

// Softmax over K classes with class 0 as the reference (logit fixed at 0).
// Rows 1..K-1 each hold `dim` weights followed by a bias; for K = 2 this is
// p(class 1) = sigmoid(w.x + b).
struct LinearSoftmax {
  int num_classes = 2;
  std::size_t dim = 0;
  std::vector<double> params;

  LinearSoftmax() = default;
  LinearSoftmax(int k, std::size_t d) : num_classes(k), dim(d), params(static_cast<std::size_t>(k - 1) * (d + 1), 0.0) {}

  std::size_t row_width() const noexcept { return dim + 1; }
  double* row(int c) { return params.data() + static_cast<std::size_t>(c - 1) * row_width(); }
  const double* row(int c) const { return params.data() + static_cast<std::size_t>(c - 1) * row_width(); }

  template <class X>
  std::vector<double> proba(const X& x) const {
    if (detail::input_width(x) > dim) throw precondition_error("input has features beyond the model's dimension");
    std::vector<double> logits(static_cast<std::size_t>(num_classes), 0.0);
    for (int c = 1; c < num_classes; ++c) logits[static_cast<std::size_t>(c)] = detail::dot(row(c), x) + row(c)[dim];
    if (num_classes == 2) {
      const double p1 = sigmoid(logits[1]);
      return {1.0 - p1, p1};
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0;
    for (auto& l : logits) z += (l = std::exp(l - mx));
    for (auto& l : logits) l /= z;
    return logits;
  }
};

// Mean negative log-likelihood over the batch plus (l2/2)*||w||^2 (biases
// unregularized). When `grad` is given it receives d(loss)/d(params).
template <class X>
double softmax_loss_and_gradient(const LinearSoftmax& m, std::span<const X> xs, std::span<const int> ys, double l2,
                                 std::vector<double>* grad) {
  require(xs.size() == ys.size() && !xs.empty(), "loss needs a nonempty batch with matching labels");
  if (grad) grad->assign(m.params.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double loss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto p = m.proba(xs[i]);
    loss -= std::log(std::max(p[static_cast<std::size_t>(ys[i])], 1e-300)) * inv_n;
    if (!grad) continue;
    for (int c = 1; c < m.num_classes; ++c) {
      const double r = (p[static_cast<std::size_t>(c)] - (ys[i] == c ? 1.0 : 0.0)) * inv_n;
      double* g = grad->data() + static_cast<std::size_t>(c - 1) * m.row_width();
      detail::axpy(r, xs[i], g);
      g[m.dim] += r;
    }
  }
  for (int c = 1; c < m.num_classes; ++c) {
    const double* w = m.row(c);
    for (std::size_t j = 0; j < m.dim; ++j) {
      loss += 0.5 * l2 * w[j] * w[j];
      if (grad) (*grad)[static_cast<std::size_t>(c - 1) * m.row_width() + j] += l2 * w[j];
    }
  }
  return loss;
}

namespace detail {

inline void check_training_labels(std::span<const int> ys, int num_classes) {
  require(num_classes >= 2, "need at least two classes");
  std::vector<int> count(static_cast<std::size_t>(num_classes), 0);
  for (int y : ys) {
    require(y >= 0 && y < num_classes, "label out of range");
    ++count[static_cast<std::size_t>(y)];
  }
  for (int c : count)
    if (c == 0) throw precondition_error("training set must contain every class");
}

template <class X>
TrainDiagnostics sgd_fit(LinearSoftmax& m, std::span<const X> xs, std::span<const int> ys, const TrainConfig& cfg) {
  require(cfg.learning_rate > 0 && cfg.epochs > 0 && cfg.batch_size > 0 && cfg.l2 >= 0, "invalid TrainConfig");
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng_t rng(cfg.seed);

  const std::size_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t step = 0;
  std::vector<double> p;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++step) {
      const double lr = cfg.learning_rate / (1.0 + static_cast<double>(step) / static_cast<double>(steps_per_epoch));
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const double scale = lr / static_cast<double>(stop - start);
      // Weight decay for the whole step first, then the data term; the
      // probabilities are taken at the pre-step weights.
      std::vector<std::pair<std::size_t, std::vector<double>>> residuals;
      residuals.reserve(stop - start);
      for (std::size_t b = start; b < stop; ++b) residuals.emplace_back(order[b], m.proba(xs[order[b]]));
      if (cfg.l2 > 0) {
        const double shrink = 1.0 - lr * cfg.l2;
        for (int c = 1; c < m.num_classes; ++c) {
          double* w = m.row(c);
          for (std::size_t j = 0; j < m.dim; ++j) w[j] *= shrink;
        }
      }
      for (const auto& [i, prob] : residuals) {
        for (int c = 1; c < m.num_classes; ++c) {
          const double r = prob[static_cast<std::size_t>(c)] - (ys[i] == c ? 1.0 : 0.0);
          double* w = m.row(c);
          axpy(-scale * r, xs[i], w);
          w[m.dim] -= scale * r;
        }
      }
    }
  }
  return {softmax_loss_and_gradient(m, xs, ys, cfg.l2, nullptr), cfg.epochs};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Random Fourier features

struct RffParams {
  std::size_t input_dim = 0;   // sparse indices must be < input_dim
  std::size_t n_features = 0;  // D
  double gamma = 0.5;
  std::uint64_t seed = 0;
  std::vector<double> omega;   // input_dim rows of D frequencies (row per input index)
  std::vector<double> phase;   // D phases in [0, 2pi)

  RffParams() = default;

  // Frequencies ~ N(0, 2*gamma), so that E[z(x).z(y)] = exp(-gamma*|x-y|^2).
  RffParams(std::size_t input_dim_, std::size_t D, double gamma_, std::uint64_t seed_)
      : input_dim(input_dim_), n_features(D), gamma(gamma_), seed(seed_) {
    require(D >= 1, "RFF needs D >= 1");
    require(gamma_ > 0, "RFF bandwidth must be positive");
    rng_t rng(seed_);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 * gamma_));
    omega.resize(input_dim * D);
    for (auto& w : omega) w = normal(rng);
    phase.resize(D);
    for (auto& b : phase) b = 2.0 * std::numbers::pi * uniform01(rng);
  }

  bool operator==(const RffParams&) const = default;
};

inline std::vector<double> rff_transform(const SparseVector& x, const RffParams& p) {
  const std::size_t D = p.n_features;
  std::vector<double> proj(p.phase);
  for (const auto& f : x) {
    if (f.index >= p.input_dim) throw precondition_error("feature index beyond RFF input dimension");
    const double* w = p.omega.data() + static_cast<std::size_t>(f.index) * D;
    for (std::size_t j = 0; j < D; ++j) proj[j] += f.value * w[j];
  }
  const double scale = std::sqrt(2.0 / static_cast<double>(D));
  for (auto& v : proj) v = scale * std::cos(v);
  return proj;
}

inline double rff_kernel_estimate(const SparseVector& x, const SparseVector& y, const RffParams& p) {
  const auto zx = rff_transform(x, p), zy = rff_transform(y, p);
  return detail::dot(zx.data(), std::span<const double>(zy));
}

inline double rbf_kernel(const SparseVector& x, const SparseVector& y, double gamma) {
  double d2 = 0;
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    if (j == y.size() || (i < x.size() && x[i].index < y[j].index)) {
      d2 += x[i].value * x[i].value;
      ++i;
    } else if (i == x.size() || y[j].index < x[i].index) {
      d2 += y[j].value * y[j].value;
      ++j;
    } else {
      const double d = x[i].value - y[j].value;
      d2 += d * d;
      ++i;
      ++j;
    }
  }
  return std::exp(-gamma * d2);
}

// ---------------------------------------------------------------------------
// Model types

struct LogisticModel {
  LinearSoftmax head;
  TrainDiagnostics diagnostics;
};

struct KernelLogisticModel {
  RffParams rff;
  LinearSoftmax head;
  TrainDiagnostics diagnostics;
};

struct TokenTagger {
  static constexpr std::uint32_t hash_bits = 18;
  std::vector<double> weights;  // averaged perceptron weights, 2^hash_bits
  double calib_scale = 1.0;     // p(break) = sigmoid(calib_scale * margin + calib_offset)
  double calib_offset = 0.0;
  TrainDiagnostics diagnostics;
};

namespace detail {

inline std::size_t max_input_width(std::span<const Example> xs) {
  std::size_t w = 0;
  for (const auto& x : xs) w = std::max(w, input_width(x.features));
  return w;
}

inline std::vector<int> labels_of(std::span<const Example> xs) {
  std::vector<int> ys;
  ys.reserve(xs.size());
  for (const auto& x : xs) ys.push_back(x.label);
  return ys;
}

}  // namespace detail

// `input_dim` is the sparse feature width (max index + 1); pass the
// dataset's so that models trained on different subsets agree.
inline LogisticModel train_logistic(std::span<const Example> data, int num_classes, std::size_t input_dim,
                                    const TrainConfig& cfg) {
  require(!data.empty(), "train_logistic: empty training set");
  const auto ys = detail::labels_of(data);
  detail::check_training_labels(ys, num_classes);
  input_dim = std::max(input_dim, detail::max_input_width(data));

  std::vector<SparseVector> xs;
  xs.reserve(data.size());
  for (const auto& e : data) xs.push_back(e.features);

  LogisticModel m{LinearSoftmax(num_classes, input_dim), {}};
  m.diagnostics = detail::sgd_fit(m.head, std::span<const SparseVector>(xs), std::span<const int>(ys), cfg);
  return m;
}

inline KernelLogisticModel train_kernel_logistic(std::span<const Example> data, int num_classes, const RffParams& rff,
                                                 const TrainConfig& cfg) {
  require(!data.empty(), "train_kernel_logistic: empty training set");
  const auto ys = detail::labels_of(data);
  detail::check_training_labels(ys, num_classes);

  std::vector<std::vector<double>> zs;
  zs.reserve(data.size());
  for (const auto& e : data) zs.push_back(rff_transform(e.features, rff));
  std::vector<std::span<const double>> views(zs.begin(), zs.end());

  KernelLogisticModel m{rff, LinearSoftmax(num_classes, rff.n_features), {}};
  m.diagnostics = detail::sgd_fit(m.head, std::span<const std::span<const double>>(views), std::span<const int>(ys), cfg);
  return m;
}

namespace detail {

// Window features for token t: bias, word and category at offsets -2..2,
// category bigrams around t and the category trigram centred on t.
inline void tagger_features(const TokenSentence& s, std::size_t t, std::vector<std::uint32_t>& out) {
  constexpr std::uint32_t mask = (1u << TokenTagger::hash_bits) - 1;
  out.clear();
  auto emit = [&](std::uint64_t tmpl, std::uint64_t value) {
    out.push_back(static_cast<std::uint32_t>(derive_seed(tmpl, {value}) & mask));
  };
  const auto n = static_cast<std::int64_t>(s.tokens.size());
  auto cat = [&](std::int64_t i) -> std::uint64_t {
    return (i < 0 || i >= n) ? 7 : static_cast<std::uint64_t>(s.tokens[static_cast<std::size_t>(i)].category);
  };
  auto word = [&](std::int64_t i) -> std::uint64_t {
    return (i < 0 || i >= n) ? 0xffffffffULL : s.tokens[static_cast<std::size_t>(i)].word;
  };
  const auto ti = static_cast<std::int64_t>(t);
  emit(1, 0);
  for (std::int64_t off = -2; off <= 2; ++off) {
    emit(10 + static_cast<std::uint64_t>(off + 2), word(ti + off));
    emit(20 + static_cast<std::uint64_t>(off + 2), cat(ti + off));
  }
  emit(30, cat(ti) * 8 + cat(ti + 1));
  emit(31, cat(ti - 1) * 8 + cat(ti));
  emit(32, (cat(ti - 1) * 8 + cat(ti)) * 8 + cat(ti + 1));
}

inline double tagger_margin(const std::vector<double>& w, const std::vector<std::uint32_t>& feats) {
  double s = 0;
  for (auto f : feats) s += w[f];
  return s;
}

// Two-parameter logistic fit of labels on margins (Newton, small ridge).
inline std::pair<double, double> fit_logistic_link(const std::vector<double>& margins, const std::vector<int>& ys) {
  double a = 1.0, c = 0.0;
  constexpr double ridge = 1e-3;
  for (int iter = 0; iter < 50; ++iter) {
    double ga = ridge * a, gc = ridge * c, haa = ridge, hac = 0, hcc = ridge;
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const double p = sigmoid(a * margins[i] + c);
      const double r = p - ys[i];
      const double w = std::max(p * (1 - p), 1e-12);
      ga += r * margins[i];
      gc += r;
      haa += w * margins[i] * margins[i];
      hac += w * margins[i];
      hcc += w;
    }
    const double det = haa * hcc - hac * hac;
    if (!(det > 0)) break;
    const double da = (hcc * ga - hac * gc) / det;
    const double dc = (haa * gc - hac * ga) / det;
    a -= da;
    c -= dc;
    if (std::abs(da) + std::abs(dc) < 1e-10) break;
  }
  return {a, c};
}

}  // namespace detail

inline TokenTagger train_token_tagger(std::span<const TokenSentence> corpus, const TrainConfig& cfg) {
  require(!corpus.empty(), "train_token_tagger: empty corpus");
  require(cfg.epochs > 0, "invalid TrainConfig");
  const std::size_t dim = std::size_t{1} << TokenTagger::hash_bits;

  // Averaged perceptron with lazy averaging: avg = w - acc / counter.
  std::vector<double> w(dim, 0.0), acc(dim, 0.0);
  double counter = 1.0;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  rng_t rng(cfg.seed);
  std::vector<std::uint32_t> feats;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto si : order) {
      const auto& s = corpus[si];
      for (std::size_t t = 0; t < s.length(); ++t) {
        detail::tagger_features(s, t, feats);
        const double y = s.labels[t] ? 1.0 : -1.0;
        if (y * detail::tagger_margin(w, feats) <= 0) {
          for (auto f : feats) {
            w[f] += y;
            acc[f] += counter * y;
          }
        }
        counter += 1.0;
      }
    }
  }
  TokenTagger tagger;
  tagger.weights.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) tagger.weights[j] = w[j] - acc[j] / counter;

  std::vector<double> margins;
  std::vector<int> ys;
  for (const auto& s : corpus)
    for (std::size_t t = 0; t < s.length(); ++t) {
      detail::tagger_features(s, t, feats);
      margins.push_back(detail::tagger_margin(tagger.weights, feats));
      ys.push_back(s.labels[t]);
    }
  std::tie(tagger.calib_scale, tagger.calib_offset) = detail::fit_logistic_link(margins, ys);

  double loss = 0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double p = sigmoid(tagger.calib_scale * margins[i] + tagger.calib_offset);
    loss -= std::log(std::max(ys[i] ? p : 1 - p, 1e-300));
  }
  tagger.diagnostics = {loss / static_cast<double>(margins.size()), cfg.epochs};
  return tagger;
}

// Per-token (p(no break), p(break)) pairs.
inline std::vector<std::array<double, 2>> tagger_proba(const TokenTagger& tagger, const TokenSentence& s) {
  std::vector<std::array<double, 2>> out;
  out.reserve(s.length());
  std::vector<std::uint32_t> feats;
  for (std::size_t t = 0; t < s.length(); ++t) {
    detail::tagger_features(s, t, feats);
    const double q = sigmoid(tagger.calib_scale * detail::tagger_margin(tagger.weights, feats) + tagger.calib_offset);
    out.push_back({1.0 - q, q});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Type-erased classifier

class ProbabilisticClassifier {
 public:
  using variant_type = std::variant<LogisticModel, KernelLogisticModel, TokenTagger>;

  ProbabilisticClassifier() = default;
  ProbabilisticClassifier(LogisticModel m) : model_(std::move(m)) {}
  ProbabilisticClassifier(KernelLogisticModel m) : model_(std::move(m)) {}
  ProbabilisticClassifier(TokenTagger m) : model_(std::move(m)) {}

  ModelKind kind() const noexcept { return static_cast<ModelKind>(model_.index()); }
  const variant_type& model() const noexcept { return model_; }

  const TrainDiagnostics& diagnostics() const {
    return std::visit([](const auto& m) -> const TrainDiagnostics& { return m.diagnostics; }, model_);
  }

  int num_classes() const {
    if (const auto* m = std::get_if<LogisticModel>(&model_)) return m->head.num_classes;
    if (const auto* m = std::get_if<KernelLogisticModel>(&model_)) return m->head.num_classes;
    return 2;
  }

  std::vector<double> predict_proba(const Example& x) const {
    if (const auto* m = std::get_if<LogisticModel>(&model_)) return m->head.proba(x.features);
    if (const auto* m = std::get_if<KernelLogisticModel>(&model_)) return m->head.proba(std::span<const double>(rff_transform(x.features, m->rff)));
    throw precondition_error("token_tagger cannot score a sparse example");
  }

  std::vector<std::array<double, 2>> predict_proba(const TokenSentence& s) const {
    if (const auto* m = std::get_if<TokenTagger>(&model_)) return tagger_proba(*m, s);
    throw precondition_error(std::string(to_string(kind())) + " cannot score a token sentence");
  }

 private:
  variant_type model_;
};

// ---------------------------------------------------------------------------
// Best-of-k selection

template <class Model>
struct BestOfK {
  Model model;
  std::size_t run_index = 0;
  double metric = 0.0;
  std::vector<double> run_metrics;
};

// Run i uses seed `base_seed` for i = 0 and derive_seed(base_seed, i)
// otherwise, so k = 1 is exactly one ordinary training run.
inline std::uint64_t best_of_k_run_seed(std::uint64_t base_seed, std::size_t i) {
  return i == 0 ? base_seed : derive_seed(base_seed, {hash_tag("best_of_k"), i});
}

// `train(seed)` builds a model, `metric(model)` scores it on validation
// data. Returns the highest-scoring run; ties go to the lowest run index.
template <class Train, class Metric>
auto best_of_k_train(Train&& train, std::size_t k, std::uint64_t base_seed, Metric&& metric)
    -> BestOfK<std::invoke_result_t<Train&, std::uint64_t>> {
  require(k >= 1, "best_of_k needs k >= 1");
  using Model = std::invoke_result_t<Train&, std::uint64_t>;
  std::optional<BestOfK<Model>> best;
  std::vector<double> metrics;
  for (std::size_t i = 0; i < k; ++i) {
    Model m = train(best_of_k_run_seed(base_seed, i));
    const double v = metric(m);
    metrics.push_back(v);
    if (!best || v > best->metric) best = BestOfK<Model>{std::move(m), i, v, {}};
  }
  best->run_metrics = std::move(metrics);
  return std::move(*best);
}

template <class A, class B>
void require_disjoint_ids(const A& train, const B& validation) {
  std::unordered_set<std::int64_t> ids;
  for (const auto& x : train) ids.insert(item_id(x));
  for (const auto& v : validation)
    if (ids.count(item_id(v))) throw precondition_error("validation item " + std::to_string(item_id(v)) + " is also in training data");
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON records, weights as decimal arrays.

inline nlohmann::json to_json_checkpoint(const ProbabilisticClassifier& clf) {
  nlohmann::json j;
  j["kind"] = to_string(clf.kind());
  j["final_loss"] = clf.diagnostics().final_loss;
  j["epochs_run"] = clf.diagnostics().epochs_run;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel> || std::is_same_v<T, KernelLogisticModel>) {
          j["num_classes"] = m.head.num_classes;
          j["dim"] = m.head.dim;
          j["params"] = m.head.params;
        }
        if constexpr (std::is_same_v<T, KernelLogisticModel>) {
          // The projection is regenerated from its seed on load.
          j["rff"] = {{"input_dim", m.rff.input_dim}, {"n_features", m.rff.n_features}, {"gamma", m.rff.gamma}, {"seed", m.rff.seed}};
        }
        if constexpr (std::is_same_v<T, TokenTagger>) {
          nlohmann::json w = nlohmann::json::array();
          for (std::size_t i = 0; i < m.weights.size(); ++i)
            if (m.weights[i] != 0.0) w.push_back({i, m.weights[i]});
          j["weights"] = w;
          j["calib_scale"] = m.calib_scale;
          j["calib_offset"] = m.calib_offset;
        }
      },
      clf.model());
  return j;
}

inline ProbabilisticClassifier from_json_checkpoint(const nlohmann::json& j) {
  try {
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw data_error("checkpoint: unknown model kind");
    const TrainDiagnostics diag{j.at("final_loss").get<double>(), j.at("epochs_run").get<int>()};
    auto head = [&] {
      LinearSoftmax h(j.at("num_classes").get<int>(), j.at("dim").get<std::size_t>());
      h.params = j.at("params").get<std::vector<double>>();
      if (h.params.size() != static_cast<std::size_t>(h.num_classes - 1) * (h.dim + 1)) throw data_error("checkpoint: parameter count mismatch");
      return h;
    };
    switch (*kind) {
      case ModelKind::logistic: return LogisticModel{head(), diag};
      case ModelKind::kernel_logistic: {
        const auto& r = j.at("rff");
        RffParams rff(r.at("input_dim").get<std::size_t>(), r.at("n_features").get<std::size_t>(), r.at("gamma").get<double>(),
                      r.at("seed").get<std::uint64_t>());
        return KernelLogisticModel{std::move(rff), head(), diag};
      }
      case ModelKind::token_tagger: {
        TokenTagger t;
        t.weights.assign(std::size_t{1} << TokenTagger::hash_bits, 0.0);
        for (const auto& kv : j.at("weights")) t.weights.at(kv.at(0).get<std::size_t>()) = kv.at(1).get<double>();
        t.calib_scale = j.at("calib_scale").get<double>();
        t.calib_offset = j.at("calib_offset").get<double>();
        t.diagnostics = diag;
        return t;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("checkpoint: ") + e.what());
  }
  throw data_error("checkpoint: unreachable");
}

}  // namespace alsim
