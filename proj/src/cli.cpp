#include "ivd/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "ivd/csv.hpp"
#include "ivd/evaluation.hpp"
#include "ivd/stats.hpp"

namespace ivd {

RatingsMatrix load_dataset(const RunConfig& config) {
  auto ratings = load_ratings(config.dataset.path, config.dataset.format);
  if (config.dataset.subset_items > 0 || config.dataset.subset_users > 0) {
    const int items = config.dataset.subset_items > 0 ? config.dataset.subset_items : ratings.n_items();
    const int users = config.dataset.subset_users > 0 ? config.dataset.subset_users : ratings.n_users();
    ratings = dense_subset(ratings, items, users);
  }
  return ratings;
}

TrainedArtifacts train_pipeline(const RunConfig& config, const RatingsMatrix& ratings) {
  AlsOptions als;
  als.rank = config.model.rank;
  als.lambda = config.model.lambda;
  als.sweeps = config.model.sweeps;
  als.whiten_users = config.model.whiten_users;
  als.seed = derive_seed(config.seed, SeedStream::training);
  TrainedArtifacts out;
  out.model = train_als(ratings, als);
  out.objective = objective(ratings, out.model);

  KMeansOptions km;
  km.k = config.clusters.k;
  km.max_iters = config.clusters.max_iters;
  km.tol = config.clusters.tol;
  km.seed = derive_seed(config.seed, SeedStream::clustering);
  out.clusters = kmeans(out.model.U, km);
  return out;
}

namespace {

struct Loaded {
  RatingsMatrix ratings;
  FactorModel model;
  ClusterModel clusters;
  ItemStats stats;
};

Loaded load_checkpointed(const RunConfig& config) {
  Loaded l;
  l.ratings = load_dataset(config);
  l.model = load_model(model_checkpoint(config));
  l.clusters = load_clusters(assignment_checkpoint(config), centroid_checkpoint(config));
  if (l.model.n_users() != l.ratings.n_users() || l.model.n_items() != l.ratings.n_items()) {
    throw StateError("checkpoint shape " + std::to_string(l.model.n_users()) + "x" +
                     std::to_string(l.model.n_items()) + " does not match the dataset " +
                     std::to_string(l.ratings.n_users()) + "x" + std::to_string(l.ratings.n_items()));
  }
  if (l.clusters.n_users() != l.ratings.n_users() || l.clusters.rank() != l.model.rank()) {
    throw StateError("cluster checkpoint does not match the model checkpoint");
  }
  l.stats = compute_stats(l.ratings, l.clusters);
  return l;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  const auto ratings = load_dataset(config);
  const auto art = train_pipeline(config, ratings);
  std::filesystem::create_directories(config.checkpoint_dir);
  save_model(art.model, model_checkpoint(config));
  save_clusters(art.clusters, assignment_checkpoint(config), centroid_checkpoint(config));

  const auto stats = compute_stats(ratings, art.clusters);
  std::vector<int> sizes(static_cast<std::size_t>(art.clusters.k()), 0);
  for (const auto g : art.clusters.assignment) ++sizes[static_cast<std::size_t>(g)];
  const auto eligible = eligible_targets(ratings, stats, config.criteria);
  nlohmann::json summary = {
      {"dataset", config.dataset.name},
      {"n_users", ratings.n_users()},
      {"n_items", ratings.n_items()},
      {"n_ratings", ratings.size()},
      {"global_mean", stats.global_mean},
      {"global_std", stats.global_std},
      {"objective", art.objective},
      {"cluster_sizes", sizes},
      {"kmeans_iterations", art.clusters.iterations},
      {"eligible_targets", eligible.size()},
      {"seed", config.seed},
  };
  csv::write_file(stats_summary(config), summary.dump(2) + "\n");
  out << "trained " << config.dataset.name << ": " << ratings.n_users() << " users, " << ratings.n_items()
      << " items, " << ratings.size() << " ratings\n"
      << "objective " << art.objective << ", cluster sizes";
  for (const auto s : sizes) out << ' ' << s;
  out << ", eligible targets " << eligible.size() << "\n"
      << "checkpoints in " << config.checkpoint_dir.string() << "\n";
  return kExitOk;
}

int cmd_forge(const RunConfig& config, std::ostream& out) {
  const auto ratings = load_dataset(config);
  auto scenario = config.scenario;
  if (!config.scenario_has_seed) scenario.rng_seed = derive_seed(config.seed, SeedStream::attack);
  ItemStats stats;
  if (scenario.attack_type == AttackType::target_cluster) {
    const auto clusters = load_clusters(assignment_checkpoint(config), centroid_checkpoint(config));
    if (clusters.n_users() != ratings.n_users()) {
      throw StateError("cluster checkpoint does not match the dataset");
    }
    stats = compute_stats(ratings, clusters);
  } else {
    stats = compute_stats(ratings);
  }
  if (scenario.target_item >= ratings.n_items()) {
    throw ConfigError("scenario.target_item " + std::to_string(scenario.target_item) +
                      " is outside the catalogue");
  }
  const auto profiles = forge_profiles(scenario, stats, ratings.n_users());

  std::string text = "user,item,rating";
  if (ratings.r_min() != 1.0 || ratings.r_max() != 5.0) {
    text += ':' + csv::format_double(ratings.r_min()) + ':' + csv::format_double(ratings.r_max());
  }
  text += '\n';
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto user = "fake_" + std::to_string(p);
    for (const auto& r : profiles[p].ratings()) {
      text += user + ',' + ratings.item_labels()[static_cast<std::size_t>(r.item)] + ',' +
              csv::format_double(r.value) + '\n';
    }
  }
  std::filesystem::create_directories(config.out_dir);
  const auto path = config.out_dir / "profiles.csv";
  csv::write_file(path, text);
  out << "forged " << profiles.size() << " " << to_string(scenario.attack_type) << " profiles against item "
      << ratings.item_labels()[static_cast<std::size_t>(scenario.target_item)] << " -> " << path.string()
      << "\n";
  return kExitOk;
}

GridOptions grid_options(const RunConfig& config, int jobs) {
  GridOptions o;
  o.out_dir = config.out_dir;
  o.dataset_name = config.dataset.name;
  o.master_seed = config.seed;
  o.target_group = config.target_group;
  o.jobs = jobs;
  o.context_key = context_key(config);
  // Retraining with the same settings must not reuse cells of an older model.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : csv::read_file(model_checkpoint(config))) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  o.context_key += "|model:" + std::to_string(h);
  return o;
}

int max_targets(const RunConfig& config) {
  int n = 1;
  for (const auto& e : config.experiments) n = std::max(n, e.n_targets);
  return n;
}

int cmd_evaluate(const RunConfig& config, int jobs, std::ostream& out) {
  if (config.experiments.empty()) throw ConfigError("empty experiment grid");
  const auto data = load_checkpointed(config);
  const TrialContext ctx{data.ratings, data.model,       data.clusters,  data.stats,
                         config.criteria, config.detectors, config.schedule};
  const auto targets = trial_targets(ctx, max_targets(config), derive_seed(config.seed, SeedStream::targets));
  std::filesystem::create_directories(config.out_dir);
  const auto outcomes = experiment_grid(ctx, config.experiments, targets, grid_options(config, jobs));

  std::size_t width = 12;
  for (const auto& e : config.experiments) width = std::max(width, e.name.size() + 2);
  const auto w = static_cast<int>(width);
  out << std::left << std::setw(w) << "experiment" << std::setw(6) << "det" << std::setw(15) << "attack"
      << std::setw(7) << "top%" << std::setw(8) << "size" << std::setw(8) << "filler" << std::setw(5)
      << "obf" << std::setw(10) << "detect" << std::setw(10) << "false_al" << "\n";
  int failed = 0;
  for (const auto& oc : outcomes) {
    out << std::left << std::setw(w) << oc.cell.experiment << std::setw(6) << to_string(oc.cell.detector)
        << std::setw(15) << to_string(oc.cell.attack) << std::setw(7) << oc.cell.filler_top_pct
        << std::setw(8) << oc.cell.attack_size << std::setw(8) << oc.cell.filler_size << std::setw(5)
        << (oc.cell.obfuscated ? "yes" : "no");
    if (oc.error.empty()) {
      out << std::setw(10) << fmt(oc.metrics.detection_rate) << std::setw(10)
          << fmt(oc.metrics.false_alarm_rate) << (oc.cached ? " (cached)" : "") << "\n";
    } else {
      ++failed;
      out << "error: " << oc.error << "\n";
    }
  }
  out << "reports in " << config.out_dir.string() << "\n";
  return failed == 0 ? kExitOk : kExitFailure;
}

int cmd_roc(const RunConfig& config, std::ostream& out) {
  if (config.experiments.empty()) throw ConfigError("empty experiment grid");
  const auto data = load_checkpointed(config);
  const TrialContext ctx{data.ratings, data.model,       data.clusters,  data.stats,
                         config.criteria, config.detectors, config.schedule};
  const auto targets = trial_targets(ctx, max_targets(config), derive_seed(config.seed, SeedStream::targets));
  const auto options = grid_options(config, 1);
  for (const auto& spec : config.experiments) {
    spec.validate();
    std::vector<GridCell> cells;
    for (const auto& c : expand_grid(spec)) {
      if (c.detector == DetectorKind::ivd) cells.push_back(c);
    }
    if (cells.empty()) throw ConfigError("experiment '" + spec.name + "' has no IVD cell to sweep");
    const auto dir = config.out_dir / spec.name;
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto trials = run_cell(ctx, cells[i], targets, options);
      const auto points = roc_sweep(trials, default_roc_thresholds(trials));
      const auto name = cells.size() == 1 ? std::string("roc.csv") : "roc_" + std::to_string(i) + ".csv";
      csv::write_file(dir / name, roc_csv(points));
      double best = 0.0;
      for (const auto& p : points) {
        if (p.fpr <= 0.10) best = std::max(best, p.tpr);
      }
      out << spec.name << " [" << to_string(cells[i].attack) << ", top " << cells[i].filler_top_pct << "%"
          << (cells[i].obfuscated ? ", obfuscated" : "") << "]: best TPR at FPR <= 0.10 is "
          << fmt(best) << " -> " << (dir / name).string() << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shilling attack forging and item-vector-deviation detection"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int jobs = 1;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads for the experiment grid")->check(CLI::PositiveNumber);
  };
  auto* train = app.add_subcommand("train", "fit the factor model and user groups, write checkpoints");
  auto* forge = app.add_subcommand("forge", "write the configured scenario's fake profiles as CSV");
  auto* evaluate = app.add_subcommand("evaluate", "run the experiment grid and write report CSVs");
  auto* roc = app.add_subcommand("roc", "sweep the IVD threshold and write ROC CSVs");
  for (auto* sub : {train, forge, evaluate, roc}) add_common(sub);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    auto config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (*train) return cmd_train(config, out);
    if (*forge) return cmd_forge(config, out);
    if (*evaluate) return cmd_evaluate(config, jobs, out);
    if (*roc) return cmd_roc(config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const EligibilityError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const StateError& e) {
    err << "state error: " << e.what() << "\n";
    return kExitState;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace ivd
