#include "ivd/config.hpp"

#include <set>

#include "ivd/csv.hpp"

namespace ivd {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::string_view where, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("unknown field '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// A scalar or a list of scalars, always returned as a list.
template <typename T>
std::vector<T> read_list(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

ExperimentSpec parse_experiment(const json& j) {
  reject_unknown(j, "experiment",
                 {"name", "detectors", "attacks", "filler_top_pct", "attack_size", "filler_size",
                  "obfuscated", "n_targets", "series"});
  ExperimentSpec spec;
  read(j, "name", spec.name);
  spec.detectors.clear();
  for (const auto& d : read_list<std::string>(j, "detectors", {"ivd"})) {
    spec.detectors.push_back(parse_detector_kind(d));
  }
  spec.attacks.clear();
  for (const auto& a : read_list<std::string>(j, "attacks", {"average"})) {
    spec.attacks.push_back(parse_attack_type(a));
  }
  spec.filler_top_pct = read_list<double>(j, "filler_top_pct", spec.filler_top_pct);
  spec.attack_size = read_list<double>(j, "attack_size", spec.attack_size);
  spec.filler_size = read_list<double>(j, "filler_size", spec.filler_size);
  spec.obfuscated = read_list<bool>(j, "obfuscated", spec.obfuscated);
  read(j, "n_targets", spec.n_targets);
  spec.series = read_list<std::string>(j, "series", {});
  return spec;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.name.empty()) throw ConfigError("dataset.name must not be empty");
  if (dataset.path.empty()) throw ConfigError("dataset.path is required");
  if (dataset.subset_items < 0 || dataset.subset_users < 0) {
    throw ConfigError("dataset subset sizes must be >= 0");
  }
  if (model.rank < 1) throw ConfigError("model.d must be >= 1");
  if (!(model.lambda > 0.0)) throw ConfigError("model.lambda must be > 0");
  if (model.sweeps < 1) throw ConfigError("model.sweeps must be >= 1");
  if (clusters.k < 1) throw ConfigError("clusters.k must be >= 1");
  if (clusters.max_iters < 1) throw ConfigError("clusters.max_iters must be >= 1");
  if (!(clusters.tol >= 0.0)) throw ConfigError("clusters.tol must be >= 0");
  if (target_group < 0 || target_group >= clusters.k) {
    throw ConfigError("target_group must lie in [0, k)");
  }
  try {
    criteria.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("criteria: ") + e.what());
  }
  detectors.validate();
  schedule.validate();
  scenario.validate();
  std::set<std::string> names;
  for (const auto& e : experiments) {
    e.validate();
    if (!names.insert(e.name).second) throw ConfigError("duplicate experiment name '" + e.name + "'");
  }
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    reject_unknown(j, "config",
                   {"dataset", "model", "clusters", "checkpoint_dir", "out_dir", "seed", "criteria",
                    "detectors", "schedule", "target_group", "scenario", "experiments"});
    if (!j.contains("dataset")) throw ConfigError("config needs a dataset section");
    const auto& d = j.at("dataset");
    reject_unknown(d, "dataset", {"name", "path", "format", "subset_items", "subset_users"});
    read(d, "name", c.dataset.name);
    std::string path;
    read(d, "path", path);
    if (path.empty()) throw ConfigError("dataset.path is required");
    c.dataset.path = resolve(base_dir, path);
    if (d.contains("format")) c.dataset.format = parse_ratings_format(d.at("format").get<std::string>());
    read(d, "subset_items", c.dataset.subset_items);
    read(d, "subset_users", c.dataset.subset_users);

    if (j.contains("model")) {
      const auto& m = j.at("model");
      reject_unknown(m, "model", {"d", "lambda", "sweeps", "whiten_users"});
      read(m, "d", c.model.rank);
      read(m, "lambda", c.model.lambda);
      read(m, "sweeps", c.model.sweeps);
      read(m, "whiten_users", c.model.whiten_users);
    }
    if (j.contains("clusters")) {
      const auto& k = j.at("clusters");
      reject_unknown(k, "clusters", {"k", "max_iters", "tol"});
      read(k, "k", c.clusters.k);
      read(k, "max_iters", c.clusters.max_iters);
      read(k, "tol", c.clusters.tol);
    }
    std::string dir = c.checkpoint_dir.string();
    read(j, "checkpoint_dir", dir);
    c.checkpoint_dir = resolve(base_dir, dir);
    dir = c.out_dir.string();
    read(j, "out_dir", dir);
    c.out_dir = resolve(base_dir, dir);
    read(j, "seed", c.seed);
    if (j.contains("criteria")) {
      const auto& t = j.at("criteria");
      reject_unknown(t, "criteria", {"max_cluster_mean", "min_ratings_per_cluster"});
      read(t, "max_cluster_mean", c.criteria.max_cluster_mean);
      read(t, "min_ratings_per_cluster", c.criteria.min_ratings_per_cluster);
    }
    if (j.contains("detectors")) {
      const auto& t = j.at("detectors");
      reject_unknown(t, "detectors", {"ivd_threshold", "mpe_threshold", "pca_fraction", "pca_components"});
      read(t, "ivd_threshold", c.detectors.ivd_threshold);
      read(t, "mpe_threshold", c.detectors.mpe_threshold);
      read(t, "pca_fraction", c.detectors.pca_fraction);
      read(t, "pca_components", c.detectors.pca_components);
    }
    if (j.contains("schedule")) {
      const auto& t = j.at("schedule");
      reject_unknown(t, "schedule", {"genuine_blocks", "block_size"});
      read(t, "genuine_blocks", c.schedule.genuine_blocks);
      read(t, "block_size", c.schedule.block_size);
    }
    read(j, "target_group", c.target_group);
    if (j.contains("scenario")) {
      c.scenario = j.at("scenario").get<AttackScenario>();
      c.scenario_has_seed = j.at("scenario").contains("rng_seed");
    }
    if (j.contains("experiments")) {
      const auto& list = j.at("experiments");
      if (!list.is_array()) throw ConfigError("experiments must be a list");
      for (const auto& e : list) c.experiments.push_back(parse_experiment(e));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config file not found: " + path.string());
  }
  json j;
  try {
    j = json::parse(csv::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto config = parse_config(j, path.parent_path());
  if (!std::filesystem::is_regular_file(config.dataset.path)) {
    throw DataError("dataset file not found: " + config.dataset.path.string());
  }
  return config;
}

std::string context_key(const RunConfig& c) {
  json j = {
      {"dataset", {{"path", c.dataset.path.string()},
                   {"format", std::string(to_string(c.dataset.format))},
                   {"subset_items", c.dataset.subset_items},
                   {"subset_users", c.dataset.subset_users}}},
      {"model", {{"d", c.model.rank}, {"lambda", c.model.lambda}, {"sweeps", c.model.sweeps},
                 {"whiten_users", c.model.whiten_users}}},
      {"clusters", {{"k", c.clusters.k}, {"max_iters", c.clusters.max_iters}, {"tol", c.clusters.tol}}},
      {"criteria", {{"max_cluster_mean", c.criteria.max_cluster_mean},
                    {"min_ratings_per_cluster", c.criteria.min_ratings_per_cluster}}},
      {"detectors", {{"ivd_threshold", c.detectors.ivd_threshold},
                     {"mpe_threshold", c.detectors.mpe_threshold},
                     {"pca_fraction", c.detectors.pca_fraction},
                     {"pca_components", c.detectors.pca_components}}},
      {"schedule", {{"genuine_blocks", c.schedule.genuine_blocks}, {"block_size", c.schedule.block_size}}},
  };
  return j.dump();
}

std::filesystem::path model_checkpoint(const RunConfig& c) { return c.checkpoint_dir / "model.txt"; }
std::filesystem::path assignment_checkpoint(const RunConfig& c) {
  return c.checkpoint_dir / "clusters_assignment.csv";
}
std::filesystem::path centroid_checkpoint(const RunConfig& c) {
  return c.checkpoint_dir / "clusters_centroids.csv";
}
std::filesystem::path stats_summary(const RunConfig& c) { return c.checkpoint_dir / "stats.json"; }

}  // namespace ivd
