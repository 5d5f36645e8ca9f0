#include <gtest/gtest.h>

#include <set>

#include "alsim/experiment.hpp"

using namespace alsim;

namespace {

ExperimentConfig tabular(std::size_t n = 2000) {
  ExperimentConfig c;
  c.source = CovtypeLikeSource{n, 5};
  c.seed_set_size = 100;
  c.holdout_size = 300;
  c.rounds = 4;
  c.batch_size = 50;
  c.subset_size = 400;
  c.rff_features = 32;
  c.train.epochs = 2;
  c.kernel_train.epochs = 2;
  c.base_seed = 9;
  SchemeConfig passive;
  SchemeConfig margin;
  margin.kind = SchemeKind::margin_pure;
  c.schemes = {passive, margin};
  return c;
}

ExperimentConfig sentences() {
  ExperimentConfig c;
  SegmentationConfig sc;
  sc.n_sentences = 1500;
  c.source = CorpusSource{sc, 4};
  c.seed_set_size = 100;
  c.holdout_size = 200;
  c.rounds = 10;
  c.batch_size = 50;
  c.metric = Metric::f1;
  c.initial_model = ModelKind::token_tagger;
  c.train.epochs = 2;
  SchemeConfig margin;
  margin.kind = SchemeKind::margin_naive_adaptive;
  c.schemes = {margin};
  return c;
}

std::vector<std::int64_t> selected(const SchemeTrace& t) {
  std::vector<std::int64_t> out;
  for (const auto& b : t.batches) out.insert(out.end(), b.ids.begin(), b.ids.end());
  return out;
}

}  // namespace

TEST(Experiment, MinimalPassiveRun) {
  auto c = tabular(600);
  c.rounds = 1;
  c.schemes = {SchemeConfig{}};
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const auto& s = t.scheme("passive");
  ASSERT_EQ(s.curve.size(), 2u);
  EXPECT_EQ(s.curve.points[0].training_size, 100);
  EXPECT_EQ(s.curve.points[1].training_size, 150);
  EXPECT_EQ(s.batches.size(), 1u);
}

TEST(Experiment, GrowthAndNoHoldoutLeakage) {
  const auto c = tabular();
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const std::set<std::int64_t> holdout(t.holdout_ids.begin(), t.holdout_ids.end());
  const std::set<std::int64_t> seed(t.seed_ids.begin(), t.seed_ids.end());
  EXPECT_EQ(holdout.size(), 300u);
  EXPECT_EQ(seed.size(), 100u);
  for (const auto& s : t.schemes) {
    ASSERT_EQ(s.curve.size(), c.rounds + 1);
    for (std::size_t i = 1; i < s.curve.size(); ++i)
      EXPECT_EQ(s.curve.points[i].training_size - s.curve.points[i - 1].training_size, 50);
    std::set<std::int64_t> seen;
    for (auto id : selected(s)) {
      EXPECT_FALSE(holdout.count(id));
      EXPECT_FALSE(seed.count(id));
      EXPECT_TRUE(seen.insert(id).second) << "selected twice: " << id;
    }
    for (const auto& b : s.batches)
      if (s.scheme != "passive")
        for (std::size_t i = 1; i < b.penalized_margin.size(); ++i) EXPECT_LE(b.penalized_margin[i - 1], b.penalized_margin[i]);
  }
}

TEST(Experiment, SingleTrialMatchesRunTrial) {
  auto c = tabular();
  c.trials = 1;
  const auto data = load_data(c.source);
  const auto r = run_experiment(c, data);
  const auto t = run_trial(c, data, 0);
  ASSERT_EQ(r.trials.size(), 1u);
  for (std::size_t i = 0; i < t.schemes.size(); ++i) {
    EXPECT_EQ(r.trials[0].schemes[i].curve, t.schemes[i].curve);
    EXPECT_EQ(selected(r.trials[0].schemes[i]), selected(t.schemes[i]));
  }
}

TEST(Experiment, DeterministicAcrossJobs) {
  auto c = tabular();
  c.trials = 4;
  const auto data = load_data(c.source);
  const auto a = run_experiment(c, data, 1);
  const auto b = run_experiment(c, data, 4);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t s = 0; s < c.schemes.size(); ++s) {
      EXPECT_EQ(a.trials[t].schemes[s].curve, b.trials[t].schemes[s].curve);
      EXPECT_EQ(selected(a.trials[t].schemes[s]), selected(b.trials[t].schemes[s]));
    }
  EXPECT_NE(a.trials[0].holdout_ids, a.trials[1].holdout_ids);
}

TEST(Experiment, NaiveAdaptiveMatchesPureUntilSwitch) {
  auto c = tabular();
  c.rounds = 6;
  SchemeConfig naive;
  naive.kind = SchemeKind::margin_naive_adaptive;
  c.schemes.push_back(naive);
  c.events.events.push_back({3, ModelSwitch{ModelKind::kernel_logistic, false}});
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const auto& pure = t.scheme("margin-logistic");
  const auto& adaptive = t.scheme("margin-naive_adaptive");
  for (int r = 0; r < 3; ++r) EXPECT_EQ(pure.batches[static_cast<std::size_t>(r)].ids, adaptive.batches[static_cast<std::size_t>(r)].ids) << r;
  for (std::size_t i = 0; i <= 3; ++i) EXPECT_EQ(pure.curve.points[i].value, adaptive.curve.points[i].value);
  bool diverged = false;
  for (std::size_t r = 3; r < 6; ++r) diverged |= pure.batches[r].ids != adaptive.batches[r].ids;
  EXPECT_TRUE(diverged);
  EXPECT_EQ(adaptive.eval_kinds[3], ModelKind::logistic);
  EXPECT_EQ(adaptive.eval_kinds[4], ModelKind::kernel_logistic);
  // The switch also changes the evaluation model of passive.
  EXPECT_EQ(t.scheme("passive").eval_kinds[4], ModelKind::kernel_logistic);
}

TEST(Experiment, SwitchToCurrentModelIsNoOp) {
  auto c = tabular();
  c.events.events.push_back({1, ModelSwitch{ModelKind::logistic, false}});
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const auto& s = t.scheme("margin-logistic");
  ASSERT_EQ(s.events.size(), 1u);
  EXPECT_NE(s.events[0].description.find("no-op"), std::string::npos);
  auto plain = c;
  plain.events.events.clear();
  EXPECT_EQ(run_trial(plain, data, 0).scheme("margin-logistic").curve, s.curve);
}

TEST(Experiment, PoolExhaustionNamesRound) {
  auto c = tabular(600);
  c.rounds = 10;  // 600 - 300 - 100 = 200 pool items, 4 batches of 50
  const auto data = load_data(c.source);
  try {
    run_trial(c, data, 0);
    FAIL() << "expected trial_error";
  } catch (const trial_error& e) {
    EXPECT_NE(std::string(e.what()).find("round 4"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("pool exhausted"), std::string::npos) << e.what();
  }
}

TEST(Experiment, RevisionTouchesTargetFraction) {
  auto c = sentences();
  c.events.events.push_back({8, LabelRevisionEvent{RevisionRule{0.4}, std::nullopt}});
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const auto& s = t.schemes[0];
  ASSERT_EQ(s.events.size(), 1u);
  EXPECT_EQ(s.events[0].round, 8);
  ASSERT_TRUE(s.events[0].revision);
  EXPECT_GE(s.events[0].revision->sentences_touched_fraction, 0.39);
  EXPECT_LE(s.events[0].revision->sentences_touched_fraction, 0.41);
  EXPECT_EQ(s.events[0].revision->entries_touched, 200u);  // 0.4 * (100 + 8 * 50)
}

TEST(Experiment, GuidelineRevisionRelabels) {
  auto c = sentences();
  c.events.events.push_back({8, LabelRevisionEvent{RevisionRule{0.0}, 2}});
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const auto& ev = t.schemes[0].events.at(0);
  ASSERT_TRUE(ev.revision);
  EXPECT_GT(ev.revision->sentences_touched_fraction, 0.25);
  EXPECT_LT(ev.revision->sentences_touched_fraction, 0.55);
  EXPECT_GT(ev.revision->labels_flipped_count, ev.revision->entries_touched - 1);
}

TEST(Experiment, SentenceBatchesCarryComposition) {
  auto c = sentences();
  c.rounds = 2;
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  for (const auto& b : t.schemes[0].batches) {
    ASSERT_TRUE(b.composition);
    EXPECT_NEAR(b.composition->a.proportion + b.composition->b.proportion, 1.0, 1e-12);
  }
}

TEST(Experiment, HardExpirationBoundsRetainedSet) {
  auto c = tabular();
  c.rounds = 5;
  c.expiration = HardExpiration{2};
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const auto& s = t.scheme("passive");
  // Pruning runs before selection and keeps age <= 2, so after round r the
  // batches of r-2, r-1 and r remain. Seed labels never expire.
  for (std::size_t i = 0; i < s.retained_sizes.size(); ++i) EXPECT_LE(s.retained_sizes[i], 100u + 3 * 50u) << i;
  EXPECT_EQ(s.retained_sizes.back(), 250u);
  EXPECT_EQ(s.curve.points.back().training_size, 350);
}

TEST(Experiment, GradualExpirationShrinksSet) {
  auto c = tabular();
  c.rounds = 5;
  c.events.events.push_back({2, ExpirationPolicyChange{GradualExpiration{{1.0, 0.5}}}});
  const auto data = load_data(c.source);
  const auto t = run_trial(c, data, 0);
  const auto& s = t.scheme("passive");
  EXPECT_EQ(s.retained_sizes[2], 200u);
  EXPECT_LT(s.retained_sizes.back(), 100u + 5 * 50u);
  EXPECT_EQ(s.curve.points.back().training_size, 350);
}

TEST(Experiment, ConfigValidation) {
  auto c = tabular();
  c.batch_size = 0;
  const auto data = load_data(tabular().source);
  EXPECT_THROW(run_trial(c, data, 0), config_error);
  auto s = sentences();
  EXPECT_THROW(run_trial(s, data, 0), config_error);
}
