#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ivd/attack.hpp"
#include "ivd/evaluation.hpp"
#include "ivd/ratings.hpp"
#include "ivd/stats.hpp"

namespace ivd {

struct DatasetConfig {
  std::string name = "ml-100k";
  std::filesystem::path path;
  RatingsFormat format = RatingsFormat::ml100k;
  // Dense subset (most-rated items, then most-active users); 0 disables.
  int subset_items = 0;
  int subset_users = 0;
};

struct ModelConfig {
  int rank = 16;
  double lambda = 0.1;
  int sweeps = 15;
  bool whiten_users = true;
};

struct ClusterConfig {
  int k = 5;
  int max_iters = 100;
  double tol = 1e-6;
};

/// One JSON run configuration. Relative paths are resolved against the
/// directory of the config file.
struct RunConfig {
  DatasetConfig dataset;
  ModelConfig model;
  ClusterConfig clusters;
  std::filesystem::path checkpoint_dir = "checkpoint";
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  TargetCriteria criteria;
  DetectorSettings detectors;
  BlockSchedule schedule;
  GroupId target_group = 0;
  AttackScenario scenario;
  // True when the scenario fixed its own rng_seed; otherwise forge derives it.
  bool scenario_has_seed = false;
  std::vector<ExperimentSpec> experiments;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
};

/// Throws ConfigError for malformed JSON, unknown keys or invalid values.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Reads and parses a config file. A missing config file is a ConfigError;
/// a missing dataset file is a DataError naming the path.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text of every setting that influences grid results, used to
/// key cached cells.
std::string context_key(const RunConfig& config);

// Checkpoint layout inside checkpoint_dir.
std::filesystem::path model_checkpoint(const RunConfig& config);
std::filesystem::path assignment_checkpoint(const RunConfig& config);
std::filesystem::path centroid_checkpoint(const RunConfig& config);
std::filesystem::path stats_summary(const RunConfig& config);

}  // namespace ivd
