#include <gtest/gtest.h>

#include <cmath>

#include "alsim/metrics.hpp"

using namespace alsim;

namespace {

LearningCurve curve(std::vector<std::pair<std::int64_t, double>> pts) {
  LearningCurve c;
  for (auto [n, v] : pts) c.points.push_back({n, v});
  return c;
}

// Passive peaks at 0.90 (6,000) and
// ends at 0.89 (7,000); active first exceeds both at 4,000.
const LearningCurve passive_fn = curve({{1000, 0.80}, {2000, 0.84}, {3000, 0.86}, {4000, 0.87}, {5000, 0.88}, {6000, 0.90}, {7000, 0.89}});
const LearningCurve active_fn = curve({{1000, 0.82}, {2000, 0.86}, {3000, 0.885}, {4000, 0.905}, {5000, 0.91}, {6000, 0.915}, {7000, 0.92}});

}  // namespace

TEST(Evaluate, PerfectAndDegenerateF1) {
  Confusion c;
  c.add(true, true);
  c.add(false, false);
  EXPECT_EQ(f1_score(c), 1.0);
  Confusion none;
  none.add(false, false);
  EXPECT_EQ(f1_score(none), 0.0);
  EXPECT_NEAR(f1_from_precision_recall(0.5, 1.0), 2.0 / 3, 1e-15);
}

TEST(Evaluate, ExamplesAndSentences) {
  LinearSoftmax head(2, 2);
  head.params = {0.0, 10.0, -5.0};  // class 1 iff x1 > 0.5
  const ProbabilisticClassifier m = LogisticModel{head, {}};
  const std::vector<Example> xs{{1, {{1, 1.0}}, 1, {}}, {2, {{1, 0.0}}, 0, {}}, {3, {{1, 0.0}}, 1, {}}};
  EXPECT_NEAR(evaluate(m, std::span<const Example>(xs), Metric::accuracy), 2.0 / 3, 1e-15);
  // tp 1, fn 1, fp 0: P = 1, R = 0.5.
  EXPECT_NEAR(evaluate(m, std::span<const Example>(xs), Metric::f1), 2.0 / 3, 1e-15);
  EXPECT_THROW(evaluate(m, std::span<const Example>(), Metric::accuracy), precondition_error);
}

TEST(Aggregate, MeanAndBand) {
  const std::vector<LearningCurve> two{curve({{10, 0.4}}), curve({{10, 0.6}})};
  const auto agg = aggregate_curves(two);
  EXPECT_NEAR(agg.mean[0], 0.5, 1e-15);
  const double half = 1.96 * std::sqrt(0.02) / std::sqrt(2.0);
  EXPECT_NEAR((*agg.lower)[0], 0.5 - half, 1e-12);
  EXPECT_NEAR((*agg.upper)[0], 0.5 + half, 1e-12);

  const std::vector<LearningCurve> same(5, passive_fn);
  const auto s = aggregate_curves(same);
  for (std::size_t i = 0; i < passive_fn.size(); ++i) {
    EXPECT_NEAR(s.mean[i], passive_fn.points[i].value, 1e-15);
    EXPECT_NEAR((*s.lower)[i], (*s.upper)[i], 1e-14);
  }
  EXPECT_FALSE(aggregate_curves(std::vector<LearningCurve>{passive_fn}).lower);
  EXPECT_THROW(aggregate_curves(std::vector<LearningCurve>{passive_fn, curve({{1, 0.5}})}), precondition_error);
}

TEST(Gains, FootnoteNumbers) {
  const auto lvm = last_vs_max_gain(active_fn, passive_fn);
  ASSERT_TRUE(lvm);
  EXPECT_NEAR(lvm->value, 1.0 / 3, 1e-12);
  EXPECT_EQ(lvm->active_size, 4000);
  EXPECT_EQ(lvm->reference_size, 6000);
  const auto fvf = first_vs_final_gain(active_fn, passive_fn);
  ASSERT_TRUE(fvf);
  EXPECT_NEAR(fvf->value, 3.0 / 7, 1e-12);
  EXPECT_EQ(fvf->active_size, 4000);
  EXPECT_EQ(fvf->reference_size, 7000);
}

TEST(Gains, AbsentAndStrict) {
  EXPECT_FALSE(last_vs_max_gain(passive_fn, passive_fn));
  EXPECT_FALSE(first_vs_final_gain(curve({{1, 0.5}, {2, 0.5}}), curve({{1, 0.5}, {2, 0.5}})));
  EXPECT_FALSE(last_vs_max_gain(curve({{1000, 0.5}, {7000, 0.6}}), passive_fn));
}

TEST(Gains, LatestCrossingAndFirstPoint) {
  // Crosses above 0.90 at 2,000, dips, crosses again at 5,000.
  const auto wobbly = curve({{1000, 0.85}, {2000, 0.91}, {3000, 0.89}, {4000, 0.90}, {5000, 0.93}});
  EXPECT_EQ(last_vs_max_gain(wobbly, passive_fn)->active_size, 5000);
  const auto early = curve({{1000, 0.95}, {2000, 0.96}});
  EXPECT_EQ(last_vs_max_gain(early, passive_fn)->active_size, 1000);
  EXPECT_NEAR(first_vs_final_gain(early, passive_fn)->value, 6.0 / 7, 1e-12);
}

TEST(Gains, MonotoneTransformAndScaleInvariance) {
  auto transform = [](LearningCurve c, auto f, std::int64_t scale) {
    for (auto& p : c.points) {
      p.value = f(p.value);
      p.training_size *= scale;
    }
    return c;
  };
  auto logit = [](double v) { return std::log(v / (1 - v)); };
  for (std::int64_t scale : {1, 3}) {
    const auto a = transform(active_fn, logit, scale), p = transform(passive_fn, logit, scale);
    EXPECT_NEAR(last_vs_max_gain(a, p)->value, 1.0 / 3, 1e-12);
    EXPECT_NEAR(first_vs_final_gain(a, p)->value, 3.0 / 7, 1e-12);
  }
}

TEST(Discounted, Examples) {
  EXPECT_NEAR(discounted_average(passive_fn, 1.0), (0.80 + 0.84 + 0.86 + 0.87 + 0.88 + 0.90 + 0.89) / 7, 1e-12);
  EXPECT_NEAR(discounted_average(curve({{1, 0.7}, {2, 0.7}, {3, 0.7}}), 0.3), 0.7, 1e-15);
  EXPECT_NEAR(discounted_average(curve({{1, 0.0}, {2, 1.0}}), 0.5), 1.0 / 3, 1e-15);
  EXPECT_THROW(discounted_average(passive_fn, 0.0), precondition_error);
  EXPECT_THROW(discounted_average(passive_fn, 1.5), precondition_error);
}

namespace {

std::vector<Example> labeled(std::size_t n) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<std::int64_t>(i + 1), {{1, static_cast<double>(i)}}, static_cast<int>(i % 2), {}});
  return out;
}

}  // namespace

TEST(HalfSampling, ConstantTrainerHasZeroVariance) {
  const auto data = labeled(40);
  const auto r = half_sampling_variance<Example>(
      data, [](std::span<const Example>, std::uint64_t) { return 0; }, [](int) { return 0.75; }, 5, 3);
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_EQ(r.values.size(), 10u);
}

TEST(HalfSampling, OnePairIsTwoSampleVariance) {
  const auto data = labeled(40);
  // Score = mean id of the half, so the two halves differ.
  const auto r = half_sampling_variance<Example>(
      data,
      [](std::span<const Example> half, std::uint64_t) {
        double s = 0;
        for (const auto& e : half) s += static_cast<double>(e.id);
        return s / static_cast<double>(half.size());
      },
      [](double v) { return v; }, 1, 8);
  ASSERT_EQ(r.values.size(), 2u);
  EXPECT_NEAR(r.variance, (r.values[0] - r.values[1]) * (r.values[0] - r.values[1]) / 2, 1e-12);
  EXPECT_GE(r.variance, 0.0);
}

TEST(HalfSampling, HalvesAreStratifiedAndComplementary) {
  const auto data = labeled(41);
  std::vector<std::size_t> sizes;
  half_sampling_variance<Example>(
      data,
      [&](std::span<const Example> half, std::uint64_t) {
        int pos = 0;
        for (const auto& e : half) pos += e.label;
        EXPECT_GE(pos, 10);
        EXPECT_LE(pos, 11);
        sizes.push_back(half.size());
        return 0;
      },
      [](int) { return 0.0; }, 3, 1);
  for (std::size_t i = 0; i < sizes.size(); i += 2) EXPECT_EQ(sizes[i] + sizes[i + 1], 41u);
}

TEST(HalfSampling, Errors) {
  auto train = [](std::span<const Example>, std::uint64_t) { return 0; };
  auto score = [](int) { return 0.0; };
  EXPECT_THROW(half_sampling_variance<Example>(labeled(3), train, score, 1, 0), precondition_error);
  auto one_class = labeled(10);
  for (auto& e : one_class) e.label = 0;
  EXPECT_THROW(half_sampling_variance<Example>(one_class, train, score, 1, 0), precondition_error);
  EXPECT_THROW(half_sampling_variance<Example>(labeled(10), train, score, 0, 0), precondition_error);
}

namespace {

TokenSentence sentence(Domain d, std::size_t len) {
  TokenSentence s;
  s.domain = d;
  s.tokens.resize(len);
  s.labels.resize(len);
  return s;
}

}  // namespace

TEST(Composition, Examples) {
  std::vector<TokenSentence> batch;
  for (int i = 0; i < 750; ++i) batch.push_back(sentence(Domain::A, 8));
  for (int i = 0; i < 250; ++i) batch.push_back(sentence(Domain::B, 12));
  const auto c = batch_composition(batch);
  EXPECT_EQ(c.a.proportion, 0.75);
  EXPECT_EQ(c.b.proportion, 0.25);
  EXPECT_EQ(*c.a.mean_length, 8.0);
  EXPECT_EQ(*c.b.mean_length, 12.0);
  EXPECT_EQ(c.mean_length, 9.0);

  const std::vector<TokenSentence> one{sentence(Domain::B, 12)};
  const auto d = batch_composition(one);
  EXPECT_EQ(d.b.proportion, 1.0);
  EXPECT_EQ(*d.b.mean_length, 12.0);
  EXPECT_EQ(d.a.proportion, 0.0);
  EXPECT_FALSE(d.a.mean_length);
  EXPECT_THROW(batch_composition(std::vector<TokenSentence>{}), precondition_error);
}
