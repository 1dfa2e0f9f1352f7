#include "ivd/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ivd/csv.hpp"

namespace ivd {

void BlockSchedule::validate() const {
  if (genuine_blocks < 0) throw ConfigError("schedule.genuine_blocks must be >= 0");
  if (block_size < 1) throw ConfigError("schedule.block_size must be >= 1");
}

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::ivd: return "ivd";
    case DetectorKind::mpe: return "mpe";
    case DetectorKind::pca: return "pca";
  }
  return "?";
}

DetectorKind parse_detector_kind(std::string_view name) {
  if (name == "ivd" || name == "IVD") return DetectorKind::ivd;
  if (name == "mpe" || name == "MPE") return DetectorKind::mpe;
  if (name == "pca" || name == "PCA") return DetectorKind::pca;
  throw ConfigError("unknown detector '" + std::string(name) + "'");
}

void DetectorSettings::validate() const {
  if (!(ivd_threshold > 0.0)) throw ConfigError("ivd_threshold must be > 0");
  if (!(mpe_threshold > 0.0)) throw ConfigError("mpe_threshold must be > 0");
  if (!(pca_fraction > 0.0 && pca_fraction <= 1.0)) throw ConfigError("pca_fraction must be in (0, 1]");
  if (pca_components < 1) throw ConfigError("pca_components must be >= 1");
}

int TrialResult::count(BlockLabel label) const {
  return static_cast<int>(std::count_if(verdicts.begin(), verdicts.end(),
                                        [&](const LabeledVerdict& v) { return v.label == label; }));
}

std::vector<RatingBlock> genuine_blocks(const TrialContext& ctx, ItemId target_item,
                                        std::uint64_t seed) {
  std::vector<RatingBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(ctx.schedule.genuine_blocks));
  for (int b = 0; b < ctx.schedule.genuine_blocks; ++b) {
    std::mt19937_64 rng(derive_seed(seed, SeedStream::genuine, static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<GroupId> pick(0, ctx.clusters.k() - 1);
    const GroupId group = pick(rng);
    blocks.push_back(gen_genuine_block(ctx.ratings, ctx.model, ctx.clusters, group, target_item,
                                       ctx.schedule.block_size, rng()));
  }
  return blocks;
}

std::vector<RatingBlock> attack_blocks(const TrialContext& ctx, const AttackScenario& scenario) {
  const auto profiles = forge_profiles(scenario, ctx.stats, ctx.ratings.n_users());
  return block_from_profiles(profiles, ctx.model, scenario.target_item, ctx.schedule.block_size,
                             ctx.ratings.n_users());
}

TrialResult run_trial(const TrialContext& ctx, const AttackScenario& scenario,
                      BlockDetector& detector, std::uint64_t seed) {
  TrialResult result;
  result.scenario = scenario;
  result.detector = detector.name();
  result.target_item = scenario.target_item;
  result.seed = seed;
  auto blocks = genuine_blocks(ctx, scenario.target_item, seed);
  auto fakes = attack_blocks(ctx, scenario);
  std::move(fakes.begin(), fakes.end(), std::back_inserter(blocks));

  const auto* ivd = dynamic_cast<const IvdBlockDetector*>(&detector);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    LabeledVerdict lv;
    lv.index = static_cast<int>(b);
    lv.label = blocks[b].label;
    if (ivd) lv.reference_distance = ivd->detector().reference_distance;
    lv.verdict = detector.check(blocks[b]);
    result.verdicts.push_back(std::move(lv));
  }
  return result;
}

namespace {

TrialResult run_pca_trial(const TrialContext& ctx, const AttackScenario& scenario,
                          std::uint64_t seed) {
  const auto profiles = forge_profiles(scenario, ctx.stats, ctx.ratings.n_users());
  std::vector<std::vector<ItemRating>> fake_ratings;
  fake_ratings.reserve(profiles.size());
  for (const auto& p : profiles) fake_ratings.push_back(p.ratings());
  const auto attacked = ctx.ratings.with_appended_users(fake_ratings);
  const auto pca = pca_user_scores(attacked, ctx.settings.pca_fraction, ctx.settings.pca_components);

  TrialResult result;
  result.scenario = scenario;
  result.detector = "pca";
  result.target_item = scenario.target_item;
  result.seed = seed;
  std::vector<char> flagged(static_cast<std::size_t>(attacked.n_users()), 0);
  for (const auto u : pca.flagged) flagged[static_cast<std::size_t>(u)] = 1;
  for (UserId u = 0; u < attacked.n_users(); ++u) {
    LabeledVerdict lv;
    lv.index = u;
    lv.label = u < ctx.ratings.n_users() ? BlockLabel::genuine : BlockLabel::attack;
    lv.verdict.flagged = flagged[static_cast<std::size_t>(u)] != 0;
    lv.verdict.score = pca.score[static_cast<std::size_t>(u)];
    result.verdicts.push_back(lv);
  }
  return result;
}

}  // namespace

TrialResult run_trial(const TrialContext& ctx, const AttackScenario& scenario,
                      DetectorKind detector, std::uint64_t seed) {
  switch (detector) {
    case DetectorKind::ivd: {
      IvdOptions options;
      options.threshold = ctx.settings.ivd_threshold;
      options.criteria = ctx.criteria;
      options.seed = derive_seed(seed, SeedStream::reference);
      IvdBlockDetector det(ivd_init(ctx.model, ctx.clusters, ctx.ratings, ctx.stats,
                                    scenario.target_item, options));
      return run_trial(ctx, scenario, det, seed);
    }
    case DetectorKind::mpe: {
      MpeBlockDetector det(ctx.clusters, ctx.model, ctx.settings.mpe_threshold);
      return run_trial(ctx, scenario, det, seed);
    }
    case DetectorKind::pca:
      return run_pca_trial(ctx, scenario, seed);
  }
  throw ConfigError("unknown detector");
}

MetricsReport aggregate(std::span<const TrialResult> results) {
  MetricsReport m;
  m.n_targets = static_cast<int>(results.size());
  for (const auto& r : results) {
    for (const auto& v : r.verdicts) {
      if (v.label == BlockLabel::attack) {
        (v.verdict.flagged ? m.true_positives : m.false_negatives) += 1;
      } else {
        (v.verdict.flagged ? m.false_positives : m.true_negatives) += 1;
      }
    }
  }
  if (const int n = m.true_positives + m.false_negatives; n > 0) {
    m.detection_rate = static_cast<double>(m.true_positives) / n;
  }
  if (const int n = m.false_positives + m.true_negatives; n > 0) {
    m.false_alarm_rate = static_cast<double>(m.false_positives) / n;
  }
  return m;
}

std::string verdict_log_csv(std::span<const TrialResult> results) {
  std::string out = "block_index,detector,score,flagged,label\n";
  for (const auto& r : results) {
    for (const auto& v : r.verdicts) {
      out += std::to_string(v.index) + ',' + r.detector + ',' + csv::format_double(v.verdict.score) +
             ',' + (v.verdict.flagged ? "1" : "0") + ',' + std::string(to_string(v.label)) + '\n';
    }
  }
  return out;
}

std::vector<RocPoint> roc_sweep(std::span<const TrialResult> results,
                                std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ConfigError("ROC thresholds must be sorted ascending");
  }
  std::vector<double> attack;
  std::vector<double> genuine;
  for (const auto& r : results) {
    for (const auto& v : r.verdicts) {
      (v.label == BlockLabel::attack ? attack : genuine).push_back(v.verdict.score);
    }
  }
  std::sort(attack.begin(), attack.end());
  std::sort(genuine.begin(), genuine.end());
  // Fraction of scores strictly above t; empty classes give 0.
  const auto above = [](const std::vector<double>& sorted, double t) {
    if (sorted.empty()) return 0.0;
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
  };
  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  for (const double t : thresholds) points.push_back({t, above(attack, t), above(genuine, t)});
  return points;
}

std::vector<double> default_roc_thresholds(std::span<const TrialResult> results) {
  std::set<double> scores;
  for (const auto& r : results) {
    for (const auto& v : r.verdicts) {
      if (std::isfinite(v.verdict.score)) scores.insert(v.verdict.score);
    }
  }
  std::vector<double> out;
  out.reserve(scores.size() + 2);
  out.push_back(-std::numeric_limits<double>::infinity());
  out.insert(out.end(), scores.begin(), scores.end());
  out.push_back(std::numeric_limits<double>::infinity());
  return out;
}

std::string roc_csv(std::span<const RocPoint> points) {
  std::string out = "threshold,tpr,fpr\n";
  for (const auto& p : points) {
    out += csv::format_double(p.threshold) + ',' + csv::format_double(p.tpr) + ',' +
           csv::format_double(p.fpr) + '\n';
  }
  return out;
}

std::vector<ItemId> trial_targets(const TrialContext& ctx, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("need at least one target");
  auto eligible = eligible_targets(ctx.ratings, ctx.stats, ctx.criteria);
  if (static_cast<int>(eligible.size()) >= n || eligible.empty()) {
    return select_target_items(ctx.ratings, ctx.stats, ctx.criteria, n, seed);
  }
  std::cerr << "warning: only " << eligible.size() << " eligible targets for " << n
            << " trials; reusing them in a seeded cycle\n";
  std::mt19937_64 rng(seed);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::vector<ItemId> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) out.push_back(eligible[static_cast<std::size_t>(t) % eligible.size()]);
  return out;
}

std::vector<double> shift_trace(const TrialContext& ctx, ItemId target_item, int n_blocks,
                                std::uint64_t seed) {
  auto schedule = ctx.schedule;
  schedule.genuine_blocks = n_blocks;
  const TrialContext local{ctx.ratings, ctx.model,    ctx.clusters, ctx.stats,
                           ctx.criteria, ctx.settings, schedule};
  auto state = ItemVectorState::empty(target_item, ctx.model.rank(), ctx.model.lambda);
  std::vector<double> shifts;
  for (const auto& block : genuine_blocks(local, target_item, seed)) {
    auto update = woodbury_update(state, block);
    shifts.push_back((update.v_hat - state.v).norm());
    state = std::move(update.next);
  }
  return shifts;
}

// ---------------------------------------------------------------------------

void ExperimentSpec::validate() const {
  if (name.empty()) throw ConfigError("experiment needs a name");
  if (name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("experiment name must not contain path separators");
  }
  if (n_targets < 1) throw ConfigError("experiment '" + name + "': n_targets must be >= 1");
  for (const auto& s : series) {
    if (s != "shift_trace" && s != "distance_trace" && s != "pc_space" && s != "mpe_distribution") {
      throw ConfigError("experiment '" + name + "': unknown series '" + s + "'");
    }
  }
}

std::vector<GridCell> expand_grid(const ExperimentSpec& spec) {
  std::vector<GridCell> cells;
  for (const auto d : spec.detectors)
    for (const auto a : spec.attacks)
      for (const auto top : spec.filler_top_pct)
        for (const auto as : spec.attack_size)
          for (const auto fs : spec.filler_size)
            for (const bool obf : spec.obfuscated)
              cells.push_back({spec.name, d, a, top, as, fs, obf, spec.n_targets});
  return cells;
}

std::vector<TrialResult> run_cell(const TrialContext& ctx, const GridCell& cell,
                                  std::span<const ItemId> targets, const GridOptions& options) {
  if (targets.empty()) throw EligibilityError("no targets for cell");
  if (options.target_group < 0 || options.target_group >= ctx.clusters.k()) {
    throw ConfigError("target_group " + std::to_string(options.target_group) + " is not a group id");
  }
  std::vector<TrialResult> trials;
  trials.reserve(static_cast<std::size_t>(cell.n_targets));
  for (int t = 0; t < cell.n_targets; ++t) {
    const auto idx = static_cast<std::uint64_t>(t);
    AttackScenario scenario;
    scenario.attack_type = cell.attack;
    scenario.target_item = targets[static_cast<std::size_t>(t) % targets.size()];
    scenario.target_group = options.target_group;
    scenario.attack_size = cell.attack_size;
    scenario.filler_size = cell.filler_size;
    scenario.filler_top_pct = cell.filler_top_pct;
    scenario.obfuscate_target = cell.obfuscated;
    scenario.rng_seed = derive_seed(options.master_seed, SeedStream::attack, idx);
    trials.push_back(run_trial(ctx, scenario, cell.detector,
                               derive_seed(options.master_seed, SeedStream::trial, idx)));
  }
  return trials;
}

std::string grid_header() {
  return "detector,dataset,attack,filler_top_pct,attack_size,filler_size,obfuscated,"
         "detection_rate,false_alarm_rate,seed";
}

namespace {

std::string rate(const std::optional<double>& r) { return r ? csv::format_double(*r) : "n/a"; }

std::string cell_key(const GridCell& c) {
  return std::string(to_string(c.detector)) + ',' + std::string(to_string(c.attack)) + ',' +
         csv::format_double(c.filler_top_pct) + ',' + csv::format_double(c.attack_size) + ',' +
         csv::format_double(c.filler_size) + ',' + (c.obfuscated ? "1" : "0") + ',' +
         std::to_string(c.n_targets);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string counts_line(const MetricsReport& m) {
  return std::to_string(m.true_positives) + ',' + std::to_string(m.false_negatives) + ',' +
         std::to_string(m.false_positives) + ',' + std::to_string(m.true_negatives) + ',' +
         std::to_string(m.n_targets);
}

std::optional<MetricsReport> read_cached(const std::filesystem::path& path, const std::string& key) {
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  std::istringstream in(csv::read_file(path));
  std::string stored_key;
  std::string counts;
  if (!std::getline(in, stored_key) || !std::getline(in, counts) || stored_key != key) {
    return std::nullopt;
  }
  const auto f = csv::split(counts, ",");
  if (f.size() != 5) return std::nullopt;
  MetricsReport m;
  try {
    m.true_positives = static_cast<int>(csv::parse_int(f[0]));
    m.false_negatives = static_cast<int>(csv::parse_int(f[1]));
    m.false_positives = static_cast<int>(csv::parse_int(f[2]));
    m.true_negatives = static_cast<int>(csv::parse_int(f[3]));
    m.n_targets = static_cast<int>(csv::parse_int(f[4]));
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  if (const int n = m.true_positives + m.false_negatives; n > 0) {
    m.detection_rate = static_cast<double>(m.true_positives) / n;
  }
  if (const int n = m.false_positives + m.true_negatives; n > 0) {
    m.false_alarm_rate = static_cast<double>(m.false_positives) / n;
  }
  return m;
}

std::string full_key(const GridCell& cell, const GridOptions& options) {
  return cell_key(cell) + '|' + options.dataset_name + '|' + std::to_string(options.master_seed) +
         '|' + std::to_string(options.target_group) + '|' + options.context_key;
}

bool wants(const ExperimentSpec& spec, std::string_view series) {
  return std::find(spec.series.begin(), spec.series.end(), series) != spec.series.end();
}

std::string series_name(const std::string& experiment, std::string_view series, std::size_t index,
                        std::size_t n_cells) {
  std::string out = experiment + "_" + std::string(series);
  if (n_cells > 1) out += "_" + std::to_string(index);
  return out + ".csv";
}

void write_series(const TrialContext& ctx, const ExperimentSpec& spec,
                  std::span<const CellOutcome> outcomes, std::span<const ItemId> targets,
                  const GridOptions& options) {
  const auto dir = options.out_dir;
  if (wants(spec, "shift_trace")) {
    std::string out = "target,block,cumulative_ratings,shift\n";
    const int n = std::min<int>(spec.n_targets, static_cast<int>(targets.size()));
    for (int t = 0; t < n; ++t) {
      const auto trace = shift_trace(
          ctx, targets[static_cast<std::size_t>(t)], ctx.schedule.genuine_blocks,
          derive_seed(options.master_seed, SeedStream::trial, static_cast<std::uint64_t>(t)));
      for (std::size_t b = 0; b < trace.size(); ++b) {
        out += ctx.ratings.item_labels()[static_cast<std::size_t>(targets[static_cast<std::size_t>(t)])] +
               ',' + std::to_string(b) + ',' +
               std::to_string(static_cast<int>(b + 1) * ctx.schedule.block_size) + ',' +
               csv::format_double(trace[b]) + '\n';
      }
    }
    csv::write_file(dir / (spec.name + "_shift_trace.csv"), out);
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& oc = outcomes[i];
    if (!oc.error.empty()) continue;
    const auto label_of = [&](const TrialResult& r) {
      return ctx.ratings.item_labels()[static_cast<std::size_t>(r.target_item)];
    };
    if (oc.cell.detector == DetectorKind::ivd && wants(spec, "distance_trace")) {
      std::string out = "target,block,label,reference_distance,new_distance,flagged\n";
      for (const auto& r : oc.trials) {
        for (const auto& v : r.verdicts) {
          out += label_of(r) + ',' + std::to_string(v.index) + ',' + std::string(to_string(v.label)) +
                 ',' + csv::format_double(v.reference_distance) + ',' +
                 csv::format_double(v.reference_distance + v.verdict.score) + ',' +
                 (v.verdict.flagged ? "1" : "0") + '\n';
        }
      }
      csv::write_file(dir / series_name(spec.name, "distance_trace", i, outcomes.size()), out);
    }
    if (oc.cell.detector == DetectorKind::mpe && wants(spec, "mpe_distribution")) {
      std::string out = "target,block,label,mpe,flagged\n";
      for (const auto& r : oc.trials) {
        for (const auto& v : r.verdicts) {
          out += label_of(r) + ',' + std::to_string(v.index) + ',' + std::string(to_string(v.label)) +
                 ',' + csv::format_double(v.verdict.score) + ',' + (v.verdict.flagged ? "1" : "0") + '\n';
        }
      }
      csv::write_file(dir / series_name(spec.name, "mpe_distribution", i, outcomes.size()), out);
    }
    if (oc.cell.detector == DetectorKind::pca && wants(spec, "pc_space") && !oc.trials.empty()) {
      // The first trial's matrix, recomputed to recover the loadings.
      const auto& first = oc.trials.front();
      const auto profiles = forge_profiles(first.scenario, ctx.stats, ctx.ratings.n_users());
      std::vector<std::vector<ItemRating>> fake_ratings;
      for (const auto& p : profiles) fake_ratings.push_back(p.ratings());
      const auto attacked = ctx.ratings.with_appended_users(fake_ratings);
      const auto pca = pca_user_scores(attacked, ctx.settings.pca_fraction, ctx.settings.pca_components);
      std::string out = "user,label";
      for (Eigen::Index c = 0; c < pca.loadings.cols(); ++c) out += ",pc" + std::to_string(c + 1);
      out += ",norm,flagged\n";
      std::vector<char> flagged(static_cast<std::size_t>(attacked.n_users()), 0);
      for (const auto u : pca.flagged) flagged[static_cast<std::size_t>(u)] = 1;
      for (UserId u = 0; u < attacked.n_users(); ++u) {
        out += attacked.user_labels()[static_cast<std::size_t>(u)] + ',' +
               (u < ctx.ratings.n_users() ? "genuine" : "attack");
        for (Eigen::Index c = 0; c < pca.loadings.cols(); ++c) {
          out += ',' + csv::format_double(pca.loadings(u, c));
        }
        out += ',' + csv::format_double(pca.score[static_cast<std::size_t>(u)]) + ',' +
               (flagged[static_cast<std::size_t>(u)] ? "1" : "0") + '\n';
      }
      csv::write_file(dir / series_name(spec.name, "pc_space", i, outcomes.size()), out);
    }
  }
}

}  // namespace

std::string grid_row(const GridCell& cell, const MetricsReport& m, std::string_view dataset,
                     std::uint64_t seed) {
  return std::string(to_string(cell.detector)) + ',' + std::string(dataset) + ',' +
         std::string(to_string(cell.attack)) + ',' + csv::format_double(cell.filler_top_pct) + ',' +
         csv::format_double(cell.attack_size) + ',' + csv::format_double(cell.filler_size) + ',' +
         (cell.obfuscated ? "1" : "0") + ',' + rate(m.detection_rate) + ',' +
         rate(m.false_alarm_rate) + ',' + std::to_string(seed);
}

std::string cell_hash(const GridCell& cell, const GridOptions& options) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(full_key(cell, options))));
  return buf;
}

std::vector<CellOutcome> experiment_grid(const TrialContext& ctx,
                                         std::span<const ExperimentSpec> experiments,
                                         std::span<const ItemId> targets,
                                         const GridOptions& options) {
  if (experiments.empty()) throw ConfigError("empty experiment grid");
  std::vector<CellOutcome> outcomes;
  std::vector<std::size_t> first_cell;
  std::vector<bool> keep_trials;
  for (const auto& spec : experiments) {
    spec.validate();
    first_cell.push_back(outcomes.size());
    for (const auto& cell : expand_grid(spec)) {
      outcomes.push_back({cell, {}, {}, false, {}});
      keep_trials.push_back(!spec.series.empty());
    }
  }
  if (outcomes.empty()) throw ConfigError("empty experiment grid");

  const auto cell_dir = options.out_dir / "cells";
  std::filesystem::create_directories(cell_dir);

  std::atomic<std::size_t> next{0};
  std::mutex io;
  const auto worker = [&] {
    for (std::size_t i = next++; i < outcomes.size(); i = next++) {
      auto& oc = outcomes[i];
      const auto key = full_key(oc.cell, options);
      const auto path = cell_dir / (cell_hash(oc.cell, options) + ".csv");
      if (!keep_trials[i]) {
        if (auto cached = read_cached(path, key)) {
          oc.metrics = *cached;
          oc.cached = true;
          continue;
        }
      }
      try {
        oc.trials = run_cell(ctx, oc.cell, targets, options);
        oc.metrics = aggregate(oc.trials);
        csv::write_file(path, key + '\n' + counts_line(oc.metrics) + '\n');
        if (!keep_trials[i]) oc.trials.clear();
      } catch (const std::exception& e) {
        oc.error = e.what();
        oc.trials.clear();
        std::lock_guard lock(io);
        std::cerr << "cell " << oc.cell.experiment << " [" << cell_key(oc.cell) << "] failed: " << e.what()
                  << "\n";
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::string errors = "experiment,detector,attack,filler_top_pct,attack_size,filler_size,obfuscated,error\n";
  for (std::size_t e = 0; e < experiments.size(); ++e) {
    const auto begin = first_cell[e];
    const auto end = e + 1 < experiments.size() ? first_cell[e + 1] : outcomes.size();
    std::string table = grid_header() + '\n';
    for (std::size_t i = begin; i < end; ++i) {
      const auto& oc = outcomes[i];
      if (!oc.error.empty()) {
        std::string msg = oc.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        errors += oc.cell.experiment + ',' + cell_key(oc.cell).substr(0, cell_key(oc.cell).rfind(',')) +
                  ',' + msg + '\n';
        continue;
      }
      table += grid_row(oc.cell, oc.metrics, options.dataset_name, options.master_seed) + '\n';
    }
    csv::write_file(options.out_dir / (experiments[e].name + ".csv"), table);
    write_series(ctx, experiments[e],
                 std::span<const CellOutcome>(outcomes).subspan(begin, end - begin), targets, options);
  }
  csv::write_file(options.out_dir / "errors.csv", errors);
  return outcomes;
}

}  // namespace ivd
