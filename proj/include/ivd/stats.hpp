#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "ivd/clustering.hpp"
#include "ivd/common.hpp"
#include "ivd/ratings.hpp"

namespace ivd {

/// Rating statistics over observed entries only; missing ratings are never
/// treated as zero. Standard deviations are population (divide by count).
struct ItemStats {
  double r_min = 1.0;
  double r_max = 5.0;
  double global_mean = 0.0;
  double global_std = 0.0;
  std::vector<double> item_mean;  // NaN for unrated items
  std::vector<double> item_std;
  std::vector<int> item_count;
  // Items by rating count, most rated first; ties keep the lower id first.
  std::vector<ItemId> popularity_rank;

  // Per-group statistics (k x n_items); present only when computed with clusters.
  Eigen::MatrixXd cluster_item_mean;  // NaN where the group has no rating
  Eigen::MatrixXd cluster_item_std;
  Eigen::MatrixXi cluster_item_count;

  int n_items() const { return static_cast<int>(item_count.size()); }
  int n_groups() const { return static_cast<int>(cluster_item_count.rows()); }
  bool has_item_mean(ItemId item) const { return item_count[static_cast<std::size_t>(item)] > 0; }
  bool has_cluster_mean(GroupId group, ItemId item) const {
    return group >= 0 && group < n_groups() && cluster_item_count(group, item) > 0;
  }
};

ItemStats compute_stats(const RatingsMatrix& ratings);
ItemStats compute_stats(const RatingsMatrix& ratings, const ClusterModel& clusters);

/// Which items may serve as attack targets: low-rated in every group yet
/// with enough trusted ratings in every group to anchor the item vector.
struct TargetCriteria {
  double max_cluster_mean = 3.5;
  int min_ratings_per_cluster = 20;

  void validate() const;
};

bool is_eligible_target(const ItemStats& stats, ItemId item, const TargetCriteria& criteria);

/// Every eligible item, in ascending item-label order.
std::vector<ItemId> eligible_targets(const RatingsMatrix& ratings, const ItemStats& stats,
                                     const TargetCriteria& criteria);

/// `n` eligible items drawn uniformly without replacement. Candidates are
/// ordered by source label before sampling, so the result depends only on
/// the labels and the seed. Throws EligibilityError naming the binding
/// constraint when fewer than `n` qualify.
std::vector<ItemId> select_target_items(const RatingsMatrix& ratings, const ItemStats& stats,
                                        const TargetCriteria& criteria, int n, std::uint64_t seed);

}  // namespace ivd
