#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivd/attack.hpp"
#include "ivd/clustering.hpp"
#include "ivd/detectors.hpp"
#include "ivd/factor_model.hpp"
#include "ivd/item_state.hpp"
#include "ivd/ratings.hpp"
#include "ivd/stats.hpp"

namespace ivd {

// Per target: `genuine_blocks` genuine blocks, then the attack split into
// blocks of `block_size` profiles.
struct BlockSchedule {
  int genuine_blocks = 20;
  int block_size = 10;

  void validate() const;
};

enum class DetectorKind { ivd, mpe, pca };
std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);

struct DetectorSettings {
  double ivd_threshold = 0.07;
  double mpe_threshold = 1.5;
  double pca_fraction = 0.10;
  int pca_components = 3;

  void validate() const;
};

/// Everything a trial reads but never modifies. Built once per (dataset,
/// seed) and shared by all cells of a grid.
struct TrialContext {
  const RatingsMatrix& ratings;
  const FactorModel& model;
  const ClusterModel& clusters;
  const ItemStats& stats;
  TargetCriteria criteria;
  DetectorSettings settings;
  BlockSchedule schedule;
};

struct LabeledVerdict {
  int index = 0;  // block position in the schedule; user id for PCA
  BlockLabel label = BlockLabel::genuine;
  Verdict verdict;
  // IVD only: the reference distance the block was judged against.
  double reference_distance = std::numeric_limits<double>::quiet_NaN();
};

struct TrialResult {
  AttackScenario scenario;
  std::string detector;
  ItemId target_item = 0;
  std::uint64_t seed = 0;
  std::vector<LabeledVerdict> verdicts;

  int count(BlockLabel label) const;
};

struct MetricsReport {
  // Empty when the class has no blocks (reported as n/a).
  std::optional<double> detection_rate;
  std::optional<double> false_alarm_rate;
  int n_targets = 0;
  int true_positives = 0;
  int false_negatives = 0;
  int false_positives = 0;
  int true_negatives = 0;
};

/// The genuine blocks of one trial. Block b draws its group uniformly and
/// its members from derive_seed(seed, genuine, b).
std::vector<RatingBlock> genuine_blocks(const TrialContext& ctx, ItemId target_item,
                                        std::uint64_t seed);

/// Forged profiles of `scenario`, folded in and cut into schedule blocks.
std::vector<RatingBlock> attack_blocks(const TrialContext& ctx, const AttackScenario& scenario);

/// Feeds the genuine blocks and then the attack blocks of `scenario` to
/// `detector`, in order.
TrialResult run_trial(const TrialContext& ctx, const AttackScenario& scenario,
                      BlockDetector& detector, std::uint64_t seed);

/// Builds the named detector for scenario.target_item and runs the trial.
/// IVD picks its reference group from derive_seed(seed, reference). PCA is
/// not block based: it scores the ratings matrix with the fakes appended
/// and yields one verdict per user.
TrialResult run_trial(const TrialContext& ctx, const AttackScenario& scenario,
                      DetectorKind detector, std::uint64_t seed);

/// Pooled counts over every verdict of every trial.
MetricsReport aggregate(std::span<const TrialResult> results);

/// Verdict log: block_index,detector,score,flagged,label.
std::string verdict_log_csv(std::span<const TrialResult> results);

struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};

/// A block counts as flagged at threshold t when its cached score exceeds t.
/// Thresholds must ascend (ConfigError otherwise).
std::vector<RocPoint> roc_sweep(std::span<const TrialResult> results,
                                std::span<const double> thresholds);
/// -inf, every distinct cached score, +inf.
std::vector<double> default_roc_thresholds(std::span<const TrialResult> results);
std::string roc_csv(std::span<const RocPoint> points);

/// `n` targets for the grid. When fewer than `n` items are eligible every
/// eligible item is reused in a seeded shuffled cycle and a warning is
/// printed; with none eligible this throws EligibilityError.
std::vector<ItemId> trial_targets(const TrialContext& ctx, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Figure series

/// Item-vector shift |v_hat - v| of each genuine block fed, with every block
/// committed, to a state that starts with no ratings.
std::vector<double> shift_trace(const TrialContext& ctx, ItemId target_item, int n_blocks,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment grid

struct ExperimentSpec {
  std::string name;
  std::vector<DetectorKind> detectors{DetectorKind::ivd};
  std::vector<AttackType> attacks{AttackType::average};
  std::vector<double> filler_top_pct{60.0};
  std::vector<double> attack_size{0.05};
  std::vector<double> filler_size{0.10};
  std::vector<bool> obfuscated{false};
  int n_targets = 50;
  // Figure series written next to the table: shift_trace, distance_trace,
  // pc_space, mpe_distribution.
  std::vector<std::string> series;

  void validate() const;
};

struct GridCell {
  std::string experiment;
  DetectorKind detector = DetectorKind::ivd;
  AttackType attack = AttackType::average;
  double filler_top_pct = 60.0;
  double attack_size = 0.05;
  double filler_size = 0.10;
  bool obfuscated = false;
  int n_targets = 50;
};

/// Cartesian product, detectors outermost and obfuscation innermost.
std::vector<GridCell> expand_grid(const ExperimentSpec& spec);

struct GridOptions {
  std::filesystem::path out_dir;
  std::string dataset_name = "ml-100k";
  std::uint64_t master_seed = 0;
  GroupId target_group = 0;
  int jobs = 1;
  // Mixed into every cell hash so cached cells never outlive their inputs.
  std::string context_key;
};

struct CellOutcome {
  GridCell cell;
  MetricsReport metrics;
  std::vector<TrialResult> trials;  // empty when the cell came from the cache
  bool cached = false;
  std::string error;
};

/// The trials of one cell: trial t attacks targets[t] with attack seed
/// derive_seed(master, attack, t) and trial seed derive_seed(master, trial, t),
/// so cells that differ only in attack parameters share genuine blocks.
std::vector<TrialResult> run_cell(const TrialContext& ctx, const GridCell& cell,
                                  std::span<const ItemId> targets, const GridOptions& options);

/// CSV row for a cell in the fixed report header order.
std::string grid_header();
std::string grid_row(const GridCell& cell, const MetricsReport& m, std::string_view dataset,
                     std::uint64_t seed);
std::string cell_hash(const GridCell& cell, const GridOptions& options);

/// Runs every cell of every experiment on up to `jobs` threads, writes
/// <out>/<experiment>.csv per experiment, <out>/errors.csv, the requested
/// series and a cache entry per finished cell under <out>/cells/. A cell
/// whose cache entry exists is not recomputed. A failing cell is recorded
/// in errors.csv and the grid continues.
std::vector<CellOutcome> experiment_grid(const TrialContext& ctx,
                                         std::span<const ExperimentSpec> experiments,
                                         std::span<const ItemId> targets,
                                         const GridOptions& options);

}  // namespace ivd
