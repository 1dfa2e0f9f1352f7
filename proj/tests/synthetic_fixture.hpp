#pragma once

#include <random>

#include "ivd/clustering.hpp"
#include "ivd/factor_model.hpp"
#include "ivd/ratings.hpp"
#include "ivd/stats.hpp"

namespace ivd::testing {

// 60 users in 3 fixed groups over 40 items; item j is rated by users with
// (u + j) % 4 != 0, so popularity varies and every group rates every item.
struct Synthetic {
  RatingsMatrix ratings;
  FactorModel model;
  ClusterModel clusters;
  ItemStats stats;

  Synthetic() {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> star(1, 5);
    std::vector<Rating> entries;
    for (int u = 0; u < 60; ++u)
      for (int j = 0; j < 40; ++j)
        if ((u + j) % 4 != 0 || j < 5) entries.push_back({u, j, static_cast<double>(star(rng))});
    ratings = RatingsMatrix(60, 40, entries);
    AlsOptions opt;
    opt.rank = 3;
    model = train_als(ratings, opt);
    clusters.centroids = Eigen::MatrixXd::Zero(3, 3);
    for (int u = 0; u < 60; ++u) clusters.assignment.push_back(u % 3);
    for (int g = 0; g < 3; ++g) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
      for (const auto u : clusters.members(g)) sum += model.U.col(u);
      clusters.centroids.col(g) = sum / 20.0;
    }
    stats = compute_stats(ratings, clusters);
  }
};

inline const Synthetic& synthetic() {
  static const Synthetic s;
  return s;
}

}  // namespace ivd::testing
