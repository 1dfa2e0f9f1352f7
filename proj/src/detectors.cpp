#include "ivd/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "ivd/attack.hpp"

namespace ivd {

IvdDetector IvdDetector::from_state(ItemVectorState state, GroupId group,
                                    const Eigen::Ref<const Eigen::VectorXd>& centroid,
                                    double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("IVD threshold must be > 0");
  IvdDetector det;
  det.reference_distance = cluster_distance(centroid, state.v);
  det.state = std::move(state);
  det.reference_group = group;
  det.reference_centroid = centroid;
  det.threshold = threshold;
  return det;
}

IvdDetector ivd_init(const FactorModel& model, const ClusterModel& clusters,
                     const RatingsMatrix& ratings, const ItemStats& stats, ItemId target_item,
                     const IvdOptions& options) {
  if (!is_eligible_target(stats, target_item, options.criteria)) {
    throw EligibilityError("insufficient trusted ratings for item " + std::to_string(target_item) +
                           ": every group needs >= " +
                           std::to_string(options.criteria.min_ratings_per_cluster) +
                           " ratings with mean below the target bound");
  }
  GroupId group = 0;
  if (options.reference_group) {
    group = *options.reference_group;
    if (group < 0 || group >= clusters.k()) throw ConfigError("reference group out of range");
  } else {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<GroupId> pick(0, clusters.k() - 1);
    group = pick(rng);
  }
  return IvdDetector::from_state(build_item_state(model, ratings, target_item), group,
                                 clusters.centroids.col(group), options.threshold);
}

double ivd_score(const IvdDetector& detector, const RatingBlock& block) {
  const auto update = woodbury_update(detector.state, block);
  return cluster_distance(detector.reference_centroid, update.v_hat) - detector.reference_distance;
}

Verdict ivd_check(IvdDetector& detector, const RatingBlock& block) {
  Verdict verdict;
  ItemUpdate update;
  try {
    if (block.item != detector.state.item) throw ValidationError("block targets a different item");
    update = woodbury_update(detector.state, block);
  } catch (const Error& e) {
    verdict.failed = true;
    verdict.flagged = true;
    verdict.score = std::numeric_limits<double>::infinity();
    verdict.error = e.what();
    return verdict;
  }
  const double distance = cluster_distance(detector.reference_centroid, update.v_hat);
  verdict.score = distance - detector.reference_distance;
  if (distance > detector.reference_distance + detector.threshold) {
    verdict.flagged = true;
    return verdict;
  }
  detector.state = std::move(update.next);
  detector.reference_distance = cluster_distance(detector.reference_centroid, detector.state.v);
  verdict.committed = true;
  return verdict;
}

std::vector<GroupId> block_user_groups(const ClusterModel& clusters, const RatingBlock& block) {
  std::vector<GroupId> groups(static_cast<std::size_t>(block.size()));
  for (int k = 0; k < block.size(); ++k) {
    const bool known = k < static_cast<int>(block.users.size()) &&
                       block.users[static_cast<std::size_t>(k)] >= 0 &&
                       block.users[static_cast<std::size_t>(k)] < clusters.n_users();
    groups[static_cast<std::size_t>(k)] = known ? clusters.group_of(block.users[static_cast<std::size_t>(k)])
                                                : nearest_group(clusters, block.X.col(k));
  }
  return groups;
}

Verdict mpe_check(const ClusterModel& clusters, const FactorModel& model, const RatingBlock& block,
                  std::span<const GroupId> user_groups, double threshold) {
  if (user_groups.size() != static_cast<std::size_t>(block.size())) {
    throw ValidationError("MPE needs one group per block member");
  }
  if (block.size() < 1) throw ValidationError("MPE on an empty block");
  const auto item_vector = model.V.col(block.item);
  double total = 0.0;
  for (int k = 0; k < block.size(); ++k) {
    const auto g = user_groups[static_cast<std::size_t>(k)];
    total += std::abs(block.y(k) - clusters.centroids.col(g).dot(item_vector));
  }
  Verdict v;
  v.score = total / block.size();
  v.flagged = v.score > threshold;
  return v;
}

Verdict MpeBlockDetector::check(const RatingBlock& block) {
  const auto groups = block_user_groups(clusters_, block);
  return mpe_check(clusters_, model_, block, groups, threshold_);
}

PcaResult pca_user_scores(const RatingsMatrix& ratings, double fraction, int n_components) {
  const int n = ratings.n_users();
  const int m = ratings.n_items();
  if (n_components < 1) throw ConfigError("PCA needs at least one component");
  if (n < n_components) throw ValidationError("PCA needs at least n_components users");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("PCA fraction must be in (0, 1]");

  // Users are the variables and items the observations. Each user's
  // zero-filled profile is standardised across all items, so the covariance
  // below is the user x user correlation matrix.
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, m);
  for (const auto& e : ratings.entries()) z(e.user, e.item) = e.value;
  std::vector<double> variance(static_cast<std::size_t>(n), 0.0);
  for (UserId u = 0; u < n; ++u) {
    auto row = z.row(u);
    row.array() -= row.mean();
    const double var = row.squaredNorm() / m;
    variance[static_cast<std::size_t>(u)] = var;
    if (var > 0.0) row /= std::sqrt(var);
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0 / m);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();

  PcaResult result;
  result.score.assign(static_cast<std::size_t>(n), 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const bool degenerate = eig.info() != Eigen::Success || !(eig.eigenvalues()(n - 1) > 1e-12);
  if (degenerate) {
    std::cerr << "warning: degenerate user covariance; ranking users by profile variance\n";
    result.fallback = true;
    result.score = variance;
  } else {
    // Eigenvalues ascend, so the leading components are the last columns.
    result.loadings = eig.eigenvectors().rightCols(n_components).rowwise().reverse();
    for (int u = 0; u < n; ++u) result.score[static_cast<std::size_t>(u)] = result.loadings.row(u).norm();
  }

  std::vector<UserId> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](UserId a, UserId b) {
    return result.score[static_cast<std::size_t>(a)] < result.score[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(scaled_count(fraction, n)));
  std::sort(order.begin(), order.end());
  result.flagged = std::move(order);
  return result;
}

std::vector<UserId> pca_flag_users(const RatingsMatrix& ratings, double fraction, int n_components) {
  return pca_user_scores(ratings, fraction, n_components).flagged;
}

}  // namespace ivd
