#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include <gtest/gtest.h>

#include "ivd/csv.hpp"
#include "ivd/evaluation.hpp"
#include "ml100k_fixture.hpp"
#include "synthetic_fixture.hpp"

namespace ivd {
namespace {

TrialContext small_context(BlockSchedule schedule = {4, 5}) {
  const auto& s = testing::synthetic();
  return {s.ratings, s.model, s.clusters, s.stats, TargetCriteria{5.0 + 1e-9, 1},
          DetectorSettings{}, schedule};
}

AttackScenario small_scenario(ItemId target = 2) {
  AttackScenario sc;
  sc.target_item = target;
  sc.attack_size = 0.2;
  sc.filler_top_pct = 100.0;
  sc.rng_seed = 8;
  return sc;
}

TrialResult fake_result(int attack, int attack_flagged, int genuine, int genuine_flagged) {
  TrialResult r;
  for (int k = 0; k < attack + genuine; ++k) {
    LabeledVerdict v;
    v.index = k;
    v.label = k < attack ? BlockLabel::attack : BlockLabel::genuine;
    v.verdict.flagged = k < attack ? k < attack_flagged : k - attack < genuine_flagged;
    v.verdict.score = static_cast<double>(k);
    r.verdicts.push_back(v);
  }
  return r;
}

class AlwaysFlag : public BlockDetector {
 public:
  std::string name() const override { return "always"; }
  Verdict check(const RatingBlock&) override { return {true, 1.0, false, false, {}}; }
};

TEST(Aggregate, Ratios) {
  const TrialResult results[] = {fake_result(10, 7, 20, 1)};
  const auto m = aggregate(results);
  EXPECT_DOUBLE_EQ(*m.detection_rate, 0.7);
  EXPECT_DOUBLE_EQ(*m.false_alarm_rate, 0.05);
  EXPECT_EQ(m.true_positives + m.false_negatives, 10);
  EXPECT_EQ(m.n_targets, 1);
}

TEST(Aggregate, MicroAveragesAcrossTrials) {
  const TrialResult results[] = {fake_result(4, 4, 10, 0), fake_result(6, 0, 10, 2)};
  const auto m = aggregate(results);
  EXPECT_DOUBLE_EQ(*m.detection_rate, 0.4);
  EXPECT_DOUBLE_EQ(*m.false_alarm_rate, 0.1);
}

TEST(Aggregate, EmptyClassIsNotAvailable) {
  const TrialResult no_attack[] = {fake_result(0, 0, 20, 3)};
  const auto m = aggregate(no_attack);
  EXPECT_FALSE(m.detection_rate.has_value());
  EXPECT_DOUBLE_EQ(*m.false_alarm_rate, 0.15);
  EXPECT_NE(grid_row(GridCell{}, m, "d", 0).find(",n/a,"), std::string::npos);
}

TEST(RunTrial, AllAttackScheduleWithAlwaysFlag) {
  const auto ctx = small_context({0, 5});
  AlwaysFlag det;
  const TrialResult r[] = {run_trial(ctx, small_scenario(), det, 1)};
  EXPECT_EQ(r[0].count(BlockLabel::genuine), 0);
  EXPECT_EQ(r[0].count(BlockLabel::attack), 3);  // 12 fakes in blocks of 5
  const auto m = aggregate(r);
  EXPECT_DOUBLE_EQ(*m.detection_rate, 1.0);
  EXPECT_FALSE(m.false_alarm_rate.has_value());
}

TEST(RunTrial, DeterministicForSeed) {
  const auto ctx = small_context();
  for (const auto kind : {DetectorKind::ivd, DetectorKind::mpe, DetectorKind::pca}) {
    const TrialResult a[] = {run_trial(ctx, small_scenario(), kind, 42)};
    const TrialResult b[] = {run_trial(ctx, small_scenario(), kind, 42)};
    EXPECT_EQ(verdict_log_csv(a), verdict_log_csv(b)) << to_string(kind);
    EXPECT_EQ(a[0].detector, std::string(to_string(kind)));
  }
}

TEST(RunTrial, ScheduleOrderAndReferenceDistances) {
  const auto ctx = small_context();
  const auto r = run_trial(ctx, small_scenario(), DetectorKind::ivd, 3);
  ASSERT_EQ(r.verdicts.size(), 7u);
  for (std::size_t b = 0; b < r.verdicts.size(); ++b) {
    EXPECT_EQ(r.verdicts[b].label, b < 4 ? BlockLabel::genuine : BlockLabel::attack);
    EXPECT_TRUE(std::isfinite(r.verdicts[b].reference_distance));
  }
  const auto pca = run_trial(ctx, small_scenario(), DetectorKind::pca, 3);
  EXPECT_EQ(pca.verdicts.size(), 72u);
  EXPECT_EQ(pca.count(BlockLabel::attack), 12);
}

TEST(VerdictLog, Format) {
  TrialResult r = fake_result(1, 1, 1, 0);
  r.detector = "ivd";
  const TrialResult rs[] = {r};
  EXPECT_EQ(verdict_log_csv(rs),
            "block_index,detector,score,flagged,label\n0,ivd,0,1,attack\n1,ivd,1,0,genuine\n");
}

TEST(Roc, ExtremesAndMonotonicity) {
  const TrialResult results[] = {fake_result(10, 0, 20, 0), fake_result(5, 0, 7, 0)};
  const auto thresholds = default_roc_thresholds(results);
  EXPECT_EQ(thresholds.front(), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(thresholds.back(), std::numeric_limits<double>::infinity());
  const auto points = roc_sweep(results, thresholds);
  EXPECT_EQ(points.front().tpr, 1.0);
  EXPECT_EQ(points.front().fpr, 1.0);
  EXPECT_EQ(points.back().tpr, 0.0);
  EXPECT_EQ(points.back().fpr, 0.0);
  for (std::size_t k = 1; k < points.size(); ++k) {
    EXPECT_LE(points[k].fpr, points[k - 1].fpr);
    EXPECT_LE(points[k].tpr, points[k - 1].tpr);
  }
  const std::vector<double> unsorted{1.0, 0.0};
  EXPECT_THROW(roc_sweep(results, unsorted), ConfigError);
  const std::vector<RocPoint> two{{0.5, 1.0, 0.25}};
  EXPECT_EQ(roc_csv(two), "threshold,tpr,fpr\n0.5,1,0.25\n");
}

TEST(Roc, StrictlyAboveThresholdCounts) {
  const TrialResult results[] = {fake_result(2, 0, 2, 0)};  // attack scores 0,1; genuine 2,3
  const double t[] = {1.0};
  const auto p = roc_sweep(results, t);
  EXPECT_EQ(p[0].tpr, 0.0);
  EXPECT_EQ(p[0].fpr, 1.0);
}

TEST(Grid, TableOneCardinality) {
  ExperimentSpec spec;
  spec.name = "table1";
  spec.detectors = {DetectorKind::ivd, DetectorKind::mpe, DetectorKind::pca};
  spec.filler_top_pct = {60, 40, 20, 10};
  const auto cells = expand_grid(spec);
  EXPECT_EQ(cells.size(), 12u);
  EXPECT_EQ(cells.front().detector, DetectorKind::ivd);
  EXPECT_EQ(cells.back().detector, DetectorKind::pca);
  EXPECT_EQ(cells[1].filler_top_pct, 40.0);
}

TEST(Grid, SpecValidation) {
  ExperimentSpec spec;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.name = "a/b";
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.name = "ok";
  spec.series = {"bogus"};
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW(parse_detector_kind("svm"), ConfigError);
  EXPECT_THROW((BlockSchedule{-1, 10}.validate()), ConfigError);
  EXPECT_THROW((DetectorSettings{0.07, 1.5, 0.0, 3}.validate()), ConfigError);
}

TEST(Grid, EmptyGridIsAConfigError) {
  const auto ctx = small_context();
  const ItemId targets[] = {0};
  EXPECT_THROW(experiment_grid(ctx, {}, targets, GridOptions{}), ConfigError);
}

TEST(Grid, RerunsAreByteIdenticalAndCached) {
  const auto ctx = small_context();
  const auto targets = trial_targets(ctx, 3, 5);
  ExperimentSpec spec;
  spec.name = "small";
  spec.detectors = {DetectorKind::ivd, DetectorKind::mpe, DetectorKind::pca};
  spec.attack_size = {0.2};
  spec.filler_top_pct = {100, 50};
  spec.n_targets = 3;
  const ExperimentSpec specs[] = {spec};

  const auto root = std::filesystem::temp_directory_path() / "ivd_grid_test";
  std::filesystem::remove_all(root);
  GridOptions a;
  a.out_dir = root / "a";
  a.jobs = 3;
  GridOptions b = a;
  b.out_dir = root / "b";
  b.jobs = 1;

  const auto first = experiment_grid(ctx, specs, targets, a);
  experiment_grid(ctx, specs, targets, b);
  const auto table = csv::read_file(a.out_dir / "small.csv");
  EXPECT_EQ(table, csv::read_file(b.out_dir / "small.csv"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 7);
  EXPECT_EQ(table.substr(0, table.find('\n')), grid_header());
  for (const auto& oc : first) {
    EXPECT_FALSE(oc.cached);
    EXPECT_TRUE(oc.error.empty()) << oc.error;
  }

  const auto again = experiment_grid(ctx, specs, targets, a);
  for (const auto& oc : again) EXPECT_TRUE(oc.cached);
  EXPECT_EQ(table, csv::read_file(a.out_dir / "small.csv"));
  EXPECT_EQ(csv::read_file(a.out_dir / "errors.csv").find('\n') + 1,
            csv::read_file(a.out_dir / "errors.csv").size());
  std::filesystem::remove_all(root);
}

TEST(Grid, CellHashDependsOnContext) {
  GridOptions a;
  GridOptions b;
  b.context_key = "other";
  EXPECT_NE(cell_hash(GridCell{}, a), cell_hash(GridCell{}, b));
  EXPECT_EQ(cell_hash(GridCell{}, a).size(), 16u);
}

TEST(Grid, FailingCellIsRecorded) {
  const auto ctx = small_context();
  const ItemId targets[] = {2};
  ExperimentSpec spec;
  spec.name = "broken";
  spec.filler_size = {0.9};  // 36 fillers from a 4-item pool
  spec.filler_top_pct = {10};
  spec.n_targets = 1;
  const ExperimentSpec specs[] = {spec};
  GridOptions o;
  o.out_dir = std::filesystem::temp_directory_path() / "ivd_grid_fail";
  std::filesystem::remove_all(o.out_dir);
  const auto out = experiment_grid(ctx, specs, targets, o);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FALSE(out[0].error.empty());
  EXPECT_NE(csv::read_file(o.out_dir / "errors.csv").find("broken,ivd,average"), std::string::npos);
  EXPECT_EQ(csv::read_file(o.out_dir / "broken.csv"), grid_header() + "\n");
  std::filesystem::remove_all(o.out_dir);
}

TEST(Targets, CycleWhenTooFewEligible) {
  auto ctx = small_context();
  ctx.criteria = {3.2, 1};
  const auto eligible = eligible_targets(ctx.ratings, ctx.stats, ctx.criteria);
  ASSERT_FALSE(eligible.empty());
  const int n = static_cast<int>(eligible.size()) + 5;
  const auto t = trial_targets(ctx, n, 1);
  ASSERT_EQ(t.size(), static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(t[k], t[k % eligible.size()]);
    EXPECT_TRUE(std::find(eligible.begin(), eligible.end(), t[k]) != eligible.end());
  }
  ctx.criteria = {1.0, 1000};
  EXPECT_THROW(trial_targets(ctx, 3, 1), EligibilityError);
}

TEST(ShiftTrace, OneShiftPerBlock) {
  const auto ctx = small_context();
  const auto trace = shift_trace(ctx, 2, 6, 9);
  ASSERT_EQ(trace.size(), 6u);
  for (const double s : trace) EXPECT_GE(s, 0.0);
  EXPECT_EQ(trace, shift_trace(ctx, 2, 6, 9));
}

// Property: the mean genuine-block shift falls once the item has about 100 ratings.
TEST(Ml100kEvaluation, ShiftShrinksWithCumulativeRatings) {
  IVD_REQUIRE_ML100K();
  const auto& d = testing::Ml100k::get();
  const auto ctx = d.context();
  const auto targets = eligible_targets(d.ratings, d.stats, d.config.criteria);
  int shrinking = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto trace = shift_trace(ctx, targets[seed % targets.size()], 20, seed);
    double early = 0.0, late = 0.0;
    for (int b = 0; b < 10; ++b) {
      early += trace[b];
      late += trace[b + 10];
    }
    shrinking += late < early;
  }
  EXPECT_GE(shrinking, 27);
}

}  // namespace
}  // namespace ivd
