#include <gtest/gtest.h>

#include <cmath>

#include "alsim/metrics.hpp"
#include "alsim/models.hpp"

using namespace alsim;

namespace {

std::vector<Example> blobs(std::size_t n, double sep, std::uint64_t seed) {
  rng_t rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double c = y ? sep / 2 : -sep / 2;
    out.push_back({static_cast<std::int64_t>(i + 1), {{1, c + g(rng)}, {2, c + g(rng)}}, y, std::nullopt});
  }
  return out;
}

std::vector<Example> circles(std::size_t n, std::uint64_t seed) {
  rng_t rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    const double r = y ? 0.5 : 1.5, a = 2 * std::numbers::pi * uniform01(rng);
    out.push_back({static_cast<std::int64_t>(i + 1), {{1, r * std::cos(a) + g(rng)}, {2, r * std::sin(a) + g(rng)}}, y, std::nullopt});
  }
  return out;
}

double accuracy(const ProbabilisticClassifier& m, const std::vector<Example>& xs) { return evaluate(m, std::span<const Example>(xs), Metric::accuracy); }

}  // namespace

TEST(Logistic, ZeroWeightsGiveUniform) {
  const LinearSoftmax m(2, 5);
  const auto p = m.proba(SparseVector{{1, 3.0}, {4, -2.0}});
  EXPECT_EQ(p[0], 0.5);
  EXPECT_EQ(p[1], 0.5);
  const LinearSoftmax m3(3, 2);
  for (double v : m3.proba(SparseVector{{1, 1.0}})) EXPECT_NEAR(v, 1.0 / 3, 1e-15);
}

TEST(Logistic, BinaryProbaIsSigmoid) {
  LinearSoftmax m(2, 3);
  m.params = {0.5, -1.0, 2.0, 0.25};  // w_0..w_2, bias
  const SparseVector x{{0, 1.0}, {2, 0.5}};
  const double z = 0.5 * 1.0 + 2.0 * 0.5 + 0.25;
  const auto p = m.proba(x);
  EXPECT_NEAR(p[1], 1 / (1 + std::exp(-z)), 1e-15);
  EXPECT_NEAR(p[0], 1 - p[1], 1e-15);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  rng_t rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int k = 2 + rep % 3;
    const std::size_t dim = 3 + static_cast<std::size_t>(rep % 4), n = 8;
    LinearSoftmax m(k, dim);
    for (auto& w : m.params) w = g(rng);
    std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
    std::vector<int> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& v : rows[i]) v = g(rng);
      ys[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    std::vector<std::span<const double>> xs(rows.begin(), rows.end());
    const double l2 = 0.05;
    std::vector<double> grad;
    softmax_loss_and_gradient(m, std::span<const std::span<const double>>(xs), std::span<const int>(ys), l2, &grad);

    const double h = 1e-5;
    double diff2 = 0, norm2 = 0;
    for (std::size_t p = 0; p < m.params.size(); ++p) {
      LinearSoftmax plus = m, minus = m;
      plus.params[p] += h;
      minus.params[p] -= h;
      const double fp = softmax_loss_and_gradient(plus, std::span<const std::span<const double>>(xs), std::span<const int>(ys), l2, nullptr);
      const double fm = softmax_loss_and_gradient(minus, std::span<const std::span<const double>>(xs), std::span<const int>(ys), l2, nullptr);
      const double num = (fp - fm) / (2 * h);
      diff2 += (num - grad[p]) * (num - grad[p]);
      norm2 += grad[p] * grad[p];
    }
    EXPECT_LT(std::sqrt(diff2) / std::sqrt(norm2), 1e-5) << "rep " << rep;
  }
}

TEST(Logistic, SeparableBlobs) {
  const auto data = blobs(100, 6.0, 1);
  TrainConfig cfg;
  cfg.epochs = 20;
  const ProbabilisticClassifier m = train_logistic(data, 2, 3, cfg);
  EXPECT_GE(accuracy(m, data), 0.99);
}

TEST(Logistic, DeterministicAndSingleClassError) {
  const auto data = blobs(60, 2.0, 2);
  TrainConfig cfg;
  cfg.seed = 17;
  EXPECT_EQ(train_logistic(data, 2, 3, cfg).head.params, train_logistic(data, 2, 3, cfg).head.params);
  auto one = data;
  for (auto& e : one) e.label = 1;
  EXPECT_THROW(train_logistic(one, 2, 3, cfg), precondition_error);
}

TEST(Rff, KernelEstimateBasics) {
  const RffParams p(5, 1024, 0.5, 4);
  const SparseVector x{{1, 0.3}, {3, -0.7}};
  const double tol = 3 / std::sqrt(1024.0);
  EXPECT_NEAR(rff_kernel_estimate(x, x, p), 1.0, tol);
  EXPECT_NEAR(rff_kernel_estimate(x, SparseVector{{1, 40.0}, {4, -35.0}}, p), 0.0, tol);
  EXPECT_EQ(RffParams(5, 64, 0.5, 4), RffParams(5, 64, 0.5, 4));
  EXPECT_THROW(rff_transform(SparseVector{{5, 1.0}}, p), precondition_error);
}

TEST(Rff, ErrorShrinksWithD) {
  rng_t rng(8);
  std::normal_distribution<double> g(0.0, 0.5);
  std::vector<std::pair<SparseVector, SparseVector>> pairs;
  for (int i = 0; i < 200; ++i) {
    SparseVector a, b;
    for (std::uint32_t j = 0; j < 6; ++j) {
      a.push_back({j, g(rng)});
      b.push_back({j, g(rng)});
    }
    pairs.emplace_back(a, b);
  }
  auto mean_error = [&](std::size_t D) {
    const RffParams p(6, D, 0.5, 12);
    double e = 0;
    for (const auto& [a, b] : pairs) e += std::abs(rff_kernel_estimate(a, b, p) - rbf_kernel(a, b, 0.5));
    return e / static_cast<double>(pairs.size());
  };
  EXPECT_LT(mean_error(4096), mean_error(256));
}

TEST(KernelLogistic, CirclesBeatLinear) {
  const auto train = circles(1000, 1), test = circles(1000, 2);
  TrainConfig lin;
  const ProbabilisticClassifier l = train_logistic(train, 2, 3, lin);
  TrainConfig ker;
  ker.learning_rate = 2.0;
  ker.epochs = 20;
  const ProbabilisticClassifier k = train_kernel_logistic(train, 2, RffParams(3, 256, 1.0, 5), ker);
  EXPECT_GE(accuracy(k, test), 0.9);
  EXPECT_LE(accuracy(l, test), 0.6);
}

TEST(KernelLogistic, SingleFeatureCapacityFloor) {
  const auto train = circles(400, 1), test = circles(400, 2);
  TrainConfig cfg;
  const ProbabilisticClassifier k = train_kernel_logistic(train, 2, RffParams(3, 1, 1.0, 5), cfg);
  // One random cosine can catch a little radial structure, nothing more.
  EXPECT_LE(accuracy(k, test), 0.75);
  const auto a = train_kernel_logistic(train, 2, RffParams(3, 16, 1.0, 5), cfg);
  EXPECT_EQ(a.head.params, train_kernel_logistic(train, 2, RffParams(3, 16, 1.0, 5), cfg).head.params);
}

TEST(Probabilities, NormalizedForEveryKind) {
  const auto data = blobs(200, 1.0, 4);
  TrainConfig cfg;
  const std::vector<ProbabilisticClassifier> models{train_logistic(data, 2, 3, cfg),
                                                    train_kernel_logistic(data, 2, RffParams(3, 64, 0.5, 1), cfg)};
  rng_t rng(1);
  std::normal_distribution<double> g(0.0, 3.0);
  for (const auto& m : models)
    for (int i = 0; i < 1000; ++i) {
      const auto p = m.predict_proba(Example{0, {{1, g(rng)}, {2, g(rng)}}, 0, {}});
      ASSERT_NEAR(p[0] + p[1], 1.0, 1e-9);
      ASSERT_GE(p[0], 0.0);
      ASSERT_LE(p[0], 1.0);
    }

  SegmentationConfig sc;
  sc.n_sentences = 300;
  const ProbabilisticClassifier tagger = train_token_tagger(generate_segmentation_corpus(sc, 1), cfg);
  sc.n_sentences = 1000;
  for (const auto& s : generate_segmentation_corpus(sc, 2))
    for (const auto& q : tagger.predict_proba(s)) {
      ASSERT_NEAR(q[0] + q[1], 1.0, 1e-9);
      ASSERT_GE(q[1], 0.0);
    }
}

TEST(Tagger, LearnsRuleV1) {
  SegmentationConfig sc;
  sc.n_sentences = 1500;
  const auto corpus = generate_segmentation_corpus(sc, 3);
  const std::span<const TokenSentence> all(corpus);
  TrainConfig cfg;
  const ProbabilisticClassifier m = train_token_tagger(all.first(1000), cfg);
  EXPECT_GE(evaluate(m, all.subspan(1000), Metric::f1), 0.95);
}

TEST(Tagger, DegenerateAndDeterministic) {
  SegmentationConfig sc;
  sc.n_sentences = 40;
  const auto corpus = generate_segmentation_corpus(sc, 3);
  TrainConfig cfg;
  const ProbabilisticClassifier one = train_token_tagger(std::span<const TokenSentence>(corpus).first(1), cfg);
  TokenSentence three{1, {{1, TokenCategory::plain}, {2, TokenCategory::strong}, {3, TokenCategory::compound}}, {0, 1, 0}, Domain::A};
  EXPECT_EQ(one.predict_proba(three).size(), 3u);
  EXPECT_EQ(train_token_tagger(corpus, cfg).weights, train_token_tagger(corpus, cfg).weights);
  EXPECT_THROW(train_token_tagger(std::span<const TokenSentence>(), cfg), precondition_error);
  EXPECT_THROW(one.predict_proba(Example{1, {{1, 1.0}}, 0, {}}), precondition_error);
}

TEST(Checkpoint, ReloadMatches) {
  const auto data = blobs(200, 1.0, 5);
  TrainConfig cfg;
  SegmentationConfig sc;
  sc.n_sentences = 200;
  const auto corpus = generate_segmentation_corpus(sc, 4);
  const std::vector<ProbabilisticClassifier> models{train_logistic(data, 2, 3, cfg),
                                                    train_kernel_logistic(data, 2, RffParams(3, 64, 0.5, 1), cfg),
                                                    train_token_tagger(corpus, cfg)};
  for (const auto& m : models) {
    const auto back = from_json_checkpoint(nlohmann::json::parse(to_json_checkpoint(m).dump()));
    ASSERT_EQ(back.kind(), m.kind());
    if (m.kind() == ModelKind::token_tagger) {
      for (const auto& s : corpus) {
        const auto a = m.predict_proba(s), b = back.predict_proba(s);
        for (std::size_t t = 0; t < a.size(); ++t) ASSERT_NEAR(a[t][1], b[t][1], 1e-12);
      }
    } else {
      for (const auto& e : data) ASSERT_NEAR(m.predict_proba(e)[1], back.predict_proba(e)[1], 1e-12);
    }
  }
  EXPECT_THROW(from_json_checkpoint(nlohmann::json{{"kind", "svm"}}), data_error);
}

TEST(BestOfK, SingleRunIdentity) {
  const auto data = blobs(100, 1.0, 6);
  auto train = [&](std::uint64_t s) {
    TrainConfig cfg;
    cfg.seed = s;
    return train_logistic(data, 2, 3, cfg);
  };
  auto metric = [&](const LogisticModel& m) { return accuracy(m, data); };
  const auto r = best_of_k_train(train, 1, 99, metric);
  EXPECT_EQ(r.run_index, 0u);
  EXPECT_EQ(r.model.head.params, train(99).head.params);
}

TEST(BestOfK, TiesGoToRunZero) {
  std::vector<std::uint64_t> seeds;
  const auto r = best_of_k_train([&](std::uint64_t s) { seeds.push_back(s); return 1; }, 10, 5, [](int) { return 0.5; });
  EXPECT_EQ(r.run_index, 0u);
  EXPECT_EQ(r.run_metrics.size(), 10u);
  EXPECT_EQ(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size(), 10u);
}

TEST(BestOfK, ReducesVarianceOfNoisyTrainer) {
  // Trainer whose validation metric is a seeded N(0.7, 0.05) draw.
  auto train = [](std::uint64_t s) { rng_t r(s); return 0.7 + 0.05 * std::normal_distribution<double>(0, 1)(r); };
  auto sd = [&](std::size_t k) {
    std::vector<double> v;
    for (std::uint64_t rep = 0; rep < 30; ++rep) v.push_back(best_of_k_train(train, k, derive_seed(1, {rep}), [](double m) { return m; }).metric);
    double mean = 0, ss = 0;
    for (double x : v) mean += x / 30;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / 29);
  };
  EXPECT_LT(sd(10), sd(1));
}

TEST(BestOfK, DisjointIds) {
  const auto a = blobs(10, 1.0, 1);
  EXPECT_THROW(require_disjoint_ids(a, a), precondition_error);
  auto b = a;
  for (auto& e : b) e.id += 100;
  EXPECT_NO_THROW(require_disjoint_ids(a, b));
}
