// Acceptance run on ML-100k with the default configuration and seed 0.
// Prints one [PASS]/[FAIL] line per criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ivd/attack.hpp"
#include "ivd/cli.hpp"
#include "ivd/config.hpp"
#include "ivd/detectors.hpp"
#include "ivd/evaluation.hpp"
#include "ivd/factor_model.hpp"
#include "ivd/item_state.hpp"
#include "ivd/stats.hpp"

namespace {

using namespace ivd;
using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] C" : "[FAIL] C") << id << " " << name << ": " << detail << std::endl;
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

struct Setup {
  RunConfig config;
  RatingsMatrix ratings;
  TrainedArtifacts art;
  ItemStats stats;
  std::vector<ItemId> targets;

  TrialContext context() const {
    return {ratings, art.model, art.clusters, stats, config.criteria, config.detectors,
            config.schedule};
  }
};

struct CellRun {
  MetricsReport metrics;
  std::vector<TrialResult> trials;
  double seconds = 0.0;
};

CellRun run(const Setup& s, DetectorKind detector, double top, bool obfuscated,
            double attack_size = 0.05) {
  GridCell cell;
  cell.experiment = "acceptance";
  cell.detector = detector;
  cell.filler_top_pct = top;
  cell.attack_size = attack_size;
  cell.obfuscated = obfuscated;
  cell.n_targets = static_cast<int>(s.targets.size());
  GridOptions options;
  options.master_seed = s.config.seed;
  const auto start = Clock::now();
  CellRun out;
  out.trials = run_cell(s.context(), cell, s.targets, options);
  out.metrics = aggregate(out.trials);
  out.seconds = seconds_since(start);
  return out;
}

double detection(const CellRun& c) { return c.metrics.detection_rate.value_or(0.0); }

// Best TPR over all thresholds whose FPR stays within `max_fpr`.
RocPoint best_point(const std::vector<TrialResult>& trials, double max_fpr) {
  const auto thresholds = default_roc_thresholds(trials);
  RocPoint best{std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0};
  for (const auto& p : roc_sweep(trials, thresholds)) {
    if (p.fpr <= max_fpr && (p.tpr > best.tpr || (p.tpr == best.tpr && p.fpr < best.fpr))) best = p;
  }
  return best;
}

// Random well-posed item states and block chains.
struct Chain {
  ItemVectorState start;
  Eigen::MatrixXd base_x;
  Eigen::VectorXd base_y;
  std::vector<Eigen::MatrixXd> xs;
  std::vector<Eigen::VectorXd> ys;
};

Chain random_chain(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(1, 32), block(1, 20), chain(1, 10), base(0, 40);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> rating(1.0, 5.0);
  auto random_matrix = [&](int r, int c) {
    Eigen::MatrixXd m(r, c);
    for (auto& x : m.reshaped()) x = normal(rng);
    return m;
  };
  auto random_ratings = [&](int n) {
    Eigen::VectorXd y(n);
    for (auto& v : y) v = rating(rng);
    return y;
  };
  Chain c;
  const int d = dim(rng);
  const int n0 = base(rng);
  c.base_x = random_matrix(d, n0);
  c.base_y = random_ratings(n0);
  c.start = build_item_state(0, c.base_x, c.base_y, 0.1);
  const int blocks = chain(rng);
  for (int b = 0; b < blocks; ++b) {
    const int m = block(rng);
    c.xs.push_back(random_matrix(d, m));
    c.ys.push_back(random_ratings(m));
  }
  return c;
}

void criterion_1() {
  std::mt19937_64 rng(derive_seed(0, 101));
  const auto start = Clock::now();
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto c = random_chain(rng);
    auto state = c.start;
    Eigen::MatrixXd all_x = c.base_x;
    Eigen::VectorXd all_y = c.base_y;
    for (std::size_t b = 0; b < c.xs.size(); ++b) {
      state = woodbury_update(state, c.xs[b], c.ys[b]).next;
      all_x.conservativeResize(Eigen::NoChange, all_x.cols() + c.xs[b].cols());
      all_x.rightCols(c.xs[b].cols()) = c.xs[b];
      all_y.conservativeResize(all_y.size() + c.ys[b].size());
      all_y.tail(c.ys[b].size()) = c.ys[b];
    }
    const Eigen::VectorXd batch = solve_item_vector(all_x, all_y, 0.1);
    worst = std::max(worst, (state.v - batch).norm() / std::max(batch.norm(), 1e-300));
  }
  const double secs = seconds_since(start);
  report(1, "woodbury exactness", worst <= 1e-8 && secs < 10.0,
         "max relative error " + fmt(worst) + " over 1000 chains in " + fmt(secs) + " s");
}

void criterion_9(const Setup& s) {
  // Random states first, then the real detector on every eligible target.
  std::mt19937_64 rng(derive_seed(0, 109));
  bool exact = true;
  for (int t = 0; t < 1000; ++t) {
    const auto c = random_chain(rng);
    const Eigen::VectorXd y = c.xs.front().transpose() * c.start.v;
    const auto update = woodbury_update(c.start, c.xs.front(), y);
    exact = exact && update.v_hat == c.start.v;
  }
  const auto ctx = s.context();
  int checked = 0;
  double worst_score = 0.0;
  const auto eligible = eligible_targets(s.ratings, s.stats, s.config.criteria);
  for (const auto item : eligible) {
    IvdOptions options;
    options.criteria = s.config.criteria;
    options.seed = derive_seed(s.config.seed, SeedStream::reference, static_cast<std::uint64_t>(item));
    auto det = ivd_init(s.art.model, s.art.clusters, s.ratings, s.stats, item, options);
    for (auto block : genuine_blocks(ctx, item, derive_seed(s.config.seed, SeedStream::trial, item))) {
      block.y = block.X.transpose() * det.state.v;
      const auto before = det.state.v;
      const auto v = ivd_check(det, block);
      exact = exact && v.score == 0.0 && !v.flagged && det.state.v == before;
      worst_score = std::max(worst_score, std::abs(v.score));
      ++checked;
    }
  }
  report(9, "zero-deviation identity", exact && checked > 0,
         "1000 random states plus " + std::to_string(checked) + " ML-100k blocks, max |score| " +
             fmt(worst_score));
}

void criterion_7(const Setup& s) {
  const auto ctx = s.context();
  int blocks = 0;
  bool identical = true;
  for (std::size_t t = 0; t < s.targets.size(); ++t) {
    AttackScenario sc;
    sc.target_item = s.targets[t];
    sc.rng_seed = derive_seed(s.config.seed, SeedStream::attack, t);
    std::vector<std::vector<RatingBlock>> per_top;
    for (const double top : {60.0, 40.0, 20.0, 10.0}) {
      sc.filler_top_pct = top;
      per_top.push_back(attack_blocks(ctx, sc));
    }
    for (std::size_t b = 0; b < per_top[0].size(); ++b) {
      // The raters are held fixed: every variant is judged with the groups
      // of the filler@60 fakes.
      const auto groups = block_user_groups(s.art.clusters, per_top[0][b]);
      const auto ref = mpe_check(s.art.clusters, s.art.model, per_top[0][b], groups,
                                 s.config.detectors.mpe_threshold);
      for (std::size_t k = 1; k < per_top.size(); ++k) {
        const auto& block = per_top[k][b];
        const auto v = mpe_check(s.art.clusters, s.art.model, block, groups,
                                 s.config.detectors.mpe_threshold);
        identical = identical && block.y == per_top[0][b].y && v.flagged == ref.flagged &&
                    std::memcmp(&v.score, &ref.score, sizeof(double)) == 0;
      }
      ++blocks;
    }
  }
  report(7, "MPE filler invariance", identical && blocks > 0,
         std::to_string(blocks) + " blocks x 4 filler pools, verdicts " +
             (identical ? "bit-identical" : "differ"));
}

void criterion_8(const Setup& s) {
  const auto ctx = s.context();
  const auto targets = trial_targets(ctx, 30, derive_seed(s.config.seed, SeedStream::targets, 1));
  int shrinking = 0;
  for (int r = 0; r < 30; ++r) {
    const auto trace = shift_trace(ctx, targets[static_cast<std::size_t>(r)], 20,
                                   derive_seed(s.config.seed, SeedStream::trial, 1000 + r));
    double early = 0.0, late = 0.0;
    for (int b = 0; b < 10; ++b) early += trace[static_cast<std::size_t>(b)];
    for (int b = 10; b < 20; ++b) late += trace[static_cast<std::size_t>(b)];
    if (late < early) ++shrinking;
  }
  report(8, "shrinking update", shrinking >= 27,
         std::to_string(shrinking) + "/30 runs with a smaller mean shift over ratings 100-200");
}

}  // namespace

int main() {
  try {
    criterion_1();

    Setup s;
    s.config.dataset.path = IVD_ML100K_PATH;
    if (!std::filesystem::is_regular_file(s.config.dataset.path)) {
      std::cerr << "ML-100k not found at " << s.config.dataset.path
                << " (run scripts/fetch_ml100k.sh)\n";
      for (int c = 2; c <= 9; ++c) report(c, "ml-100k", false, "dataset missing");
      return 1;
    }
    const auto train_start = Clock::now();
    s.ratings = load_dataset(s.config);
    s.art = train_pipeline(s.config, s.ratings);
    s.stats = compute_stats(s.ratings, s.art.clusters);
    s.targets = trial_targets(s.context(), 50, derive_seed(s.config.seed, SeedStream::targets));
    std::cout << "trained ML-100k in " << fmt(seconds_since(train_start)) << " s, "
              << eligible_targets(s.ratings, s.stats, s.config.criteria).size()
              << " eligible targets\n";

    // Table 1 grid, IVD.
    std::map<double, CellRun> ivd;
    double ivd_seconds = 0.0;
    for (const double top : {60.0, 40.0, 20.0, 10.0}) {
      ivd[top] = run(s, DetectorKind::ivd, top, false);
      ivd_seconds += ivd[top].seconds;
    }
    {
      bool pass = ivd_seconds < 600.0;
      std::string detail;
      for (const double top : {60.0, 40.0, 20.0, 10.0}) {
        pass = pass && detection(ivd[top]) >= 0.95;
        detail += "@" + fmt(top) + "=" + fmt(detection(ivd[top])) + " ";
      }
      report(2, "IVD table row", pass, detail + "in " + fmt(ivd_seconds) + " s");
    }

    // Same grid, PCA, plus fillers drawn from the whole catalogue.
    {
      std::map<double, CellRun> pca;
      for (const double top : {60.0, 40.0, 20.0, 10.0, 100.0}) {
        pca[top] = run(s, DetectorKind::pca, top, false);
      }
      std::string detail;
      for (const double top : {60.0, 40.0, 20.0, 10.0, 100.0}) {
        detail += "@" + fmt(top) + "=" + fmt(detection(pca[top])) + " ";
      }
      const bool pass = detection(pca[20.0]) <= 0.05 && detection(pca[10.0]) <= 0.05 &&
                        detection(pca[60.0]) >= 0.85 && detection(pca[100.0]) >= 0.85;
      report(3, "PCA collapse", pass, detail);
    }

    // Obfuscated average attack at filler@20.
    const auto ivd_obf = run(s, DetectorKind::ivd, 20.0, true);
    {
      const auto mpe_obf = run(s, DetectorKind::mpe, 20.0, true);
      const auto pca_obf = run(s, DetectorKind::pca, 20.0, true);
      const double i = detection(ivd_obf), m = detection(mpe_obf), p = detection(pca_obf);
      const bool pass = i > m && m > p && i >= 0.75 && m >= 0.3 && m <= 0.7 && p <= 0.1;
      report(4, "obfuscation ordering", pass,
             "IVD=" + fmt(i) + " MPE=" + fmt(m) + " PCA=" + fmt(p));
    }

    // ROC at filler@20 from the cached IVD scores.
    {
      const auto plain = best_point(ivd[20.0].trials, 0.12);
      const auto obf = best_point(ivd_obf.trials, 0.12);
      report(5, "ROC anchors", plain.tpr >= 0.98 && obf.tpr >= 0.7,
             "plain TPR=" + fmt(plain.tpr) + " at FPR=" + fmt(plain.fpr) +
                 ", obfuscated TPR=" + fmt(obf.tpr) + " at FPR=" + fmt(obf.fpr));
    }

    // Attack-size sweep at filler@60.
    {
      const auto small = run(s, DetectorKind::ivd, 60.0, false, 0.005);
      const double lo = detection(small), hi = detection(ivd[60.0]);
      report(6, "attack-size floor", lo <= 0.2 && hi >= 0.9,
             "size 0.5% -> " + fmt(lo) + ", size 5% -> " + fmt(hi));
    }

    criterion_7(s);
    criterion_8(s);
    criterion_9(s);
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
