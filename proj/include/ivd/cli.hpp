#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ivd/clustering.hpp"
#include "ivd/config.hpp"
#include "ivd/factor_model.hpp"
#include "ivd/ratings.hpp"

namespace ivd {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitState = 4;

/// The ratings a config refers to, subset applied.
RatingsMatrix load_dataset(const RunConfig& config);

struct TrainedArtifacts {
  FactorModel model;
  ClusterModel clusters;
  double objective = 0.0;
};

/// ALS then k-means, seeded from derive_seed(config.seed, training) and
/// derive_seed(config.seed, clustering).
TrainedArtifacts train_pipeline(const RunConfig& config, const RatingsMatrix& ratings);

/// `ivd <train|forge|evaluate|roc> --config PATH [--seed N] [--out DIR] [--jobs N]`.
/// Returns the exit code; reports go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ivd
