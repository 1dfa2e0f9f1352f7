#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "ivd/common.hpp"

namespace ivd {

/// User groups: column g of `centroids` is the preference vector shared by
/// every user assigned to group g.
struct ClusterModel {
  Eigen::MatrixXd centroids;
  std::vector<GroupId> assignment;
  // Within-cluster sum of squares after each assignment step.
  std::vector<double> inertia_trace;
  int iterations = 0;

  int k() const { return static_cast<int>(centroids.cols()); }
  int rank() const { return static_cast<int>(centroids.rows()); }
  int n_users() const { return static_cast<int>(assignment.size()); }

  /// Throws ValidationError for an unknown user.
  GroupId group_of(UserId user) const;
  std::vector<UserId> members(GroupId group) const;
};

struct KMeansOptions {
  int k = 5;
  int max_iters = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

/// Lloyd's algorithm over the columns of `points` with k-means++ seeding.
/// Stops when no centroid moves more than `tol` or after `max_iters`. A
/// cluster that empties is reseeded at the point farthest from its centroid.
ClusterModel kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const KMeansOptions& options);

double inertia(const Eigen::Ref<const Eigen::MatrixXd>& points, const ClusterModel& clusters);

/// Group-level rating estimate: centroid of the user's group dotted with the item vector.
double group_predict(const ClusterModel& clusters, const Eigen::Ref<const Eigen::MatrixXd>& V,
                     UserId user, ItemId item);

/// Euclidean distance; throws ValidationError on a dimension mismatch.
double cluster_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b);

GroupId nearest_group(const ClusterModel& clusters, const Eigen::Ref<const Eigen::VectorXd>& u);

/// `assignment_path`: user,group rows. `centroids_path`: group,c0,...,c{d-1} rows.
void save_clusters(const ClusterModel& clusters, const std::filesystem::path& assignment_path,
                   const std::filesystem::path& centroids_path);
ClusterModel load_clusters(const std::filesystem::path& assignment_path,
                           const std::filesystem::path& centroids_path);

}  // namespace ivd
