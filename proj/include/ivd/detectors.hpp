#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ivd/clustering.hpp"
#include "ivd/common.hpp"
#include "ivd/factor_model.hpp"
#include "ivd/item_state.hpp"
#include "ivd/ratings.hpp"
#include "ivd/stats.hpp"

namespace ivd {

struct Verdict {
  bool flagged = false;
  // IVD: distance increase over the reference; MPE: mean absolute prediction error.
  double score = 0.0;
  bool committed = false;
  // The detector could not evaluate the block; such blocks are flagged with score +inf.
  bool failed = false;
  std::string error;
};

/// Common interface for detectors that judge one rating block at a time.
class BlockDetector {
 public:
  virtual ~BlockDetector() = default;
  virtual std::string name() const = 0;
  virtual Verdict check(const RatingBlock& block) = 0;
};

// ---------------------------------------------------------------------------
// Item vector deviation

struct IvdDetector {
  ItemVectorState state;
  GroupId reference_group = 0;
  Eigen::VectorXd reference_centroid;
  double reference_distance = 0.0;
  double threshold = 0.07;

  /// Detector around an existing state; reference_distance = |centroid - v|.
  static IvdDetector from_state(ItemVectorState state, GroupId group,
                                const Eigen::Ref<const Eigen::VectorXd>& centroid, double threshold);
};

struct IvdOptions {
  double threshold = 0.07;
  std::optional<GroupId> reference_group;  // uniform random group when unset
  TargetCriteria criteria;
  std::uint64_t seed = 0;
};

/// Builds the item state from the current genuine ratings of `target_item`.
/// Throws EligibilityError("insufficient trusted ratings ...") when the item
/// fails `options.criteria`.
IvdDetector ivd_init(const FactorModel& model, const ClusterModel& clusters,
                     const RatingsMatrix& ratings, const ItemStats& stats, ItemId target_item,
                     const IvdOptions& options);

/// Peeks at the updated item vector without committing. If its distance to
/// the reference centroid exceeds reference_distance + threshold the block is
/// flagged and the detector is left exactly as it was; otherwise the update
/// is committed and the reference distance refreshed. The score is measured
/// against the reference distance before the block.
Verdict ivd_check(IvdDetector& detector, const RatingBlock& block);

/// Score only: distance increase the block would cause, state untouched.
double ivd_score(const IvdDetector& detector, const RatingBlock& block);

class IvdBlockDetector : public BlockDetector {
 public:
  explicit IvdBlockDetector(IvdDetector detector) : detector_(std::move(detector)) {}
  std::string name() const override { return "ivd"; }
  Verdict check(const RatingBlock& block) override { return ivd_check(detector_, block); }
  const IvdDetector& detector() const { return detector_; }

 private:
  IvdDetector detector_;
};

// ---------------------------------------------------------------------------
// Mean prediction error

/// Group of each block member: the assigned group for users known to the
/// cluster model, otherwise the centroid nearest to the member's factors.
std::vector<GroupId> block_user_groups(const ClusterModel& clusters, const RatingBlock& block);

/// MPE = mean_k |y_k - centroid(g_k) . V_item|; flagged when MPE > threshold. Stateless.
Verdict mpe_check(const ClusterModel& clusters, const FactorModel& model, const RatingBlock& block,
                  std::span<const GroupId> user_groups, double threshold);

class MpeBlockDetector : public BlockDetector {
 public:
  MpeBlockDetector(const ClusterModel& clusters, const FactorModel& model, double threshold)
      : clusters_(clusters), model_(model), threshold_(threshold) {}
  std::string name() const override { return "mpe"; }
  Verdict check(const RatingBlock& block) override;

 private:
  const ClusterModel& clusters_;
  const FactorModel& model_;
  double threshold_;
};

// ---------------------------------------------------------------------------
// PCA (user-level, not block based)

struct PcaResult {
  std::vector<UserId> flagged;   // ascending ids
  std::vector<double> score;     // per user: norm of component loadings
  Eigen::MatrixXd loadings;      // n_users x n_components
  bool fallback = false;         // ranked by raw profile variance instead
};

/// Users as variables, items as observations: every user's zero-filled
/// rating profile is standardised across all items (users with a constant
/// profile stay at zero) and the leading principal components of the
/// resulting user x user correlation matrix are extracted. Users whose
/// loadings lie closest to the origin (the ceil(fraction * n_users) smallest
/// norms) are flagged. A degenerate matrix falls back to ranking by profile
/// variance, with a warning on stderr.
PcaResult pca_user_scores(const RatingsMatrix& ratings, double fraction, int n_components);

std::vector<UserId> pca_flag_users(const RatingsMatrix& ratings, double fraction, int n_components);

}  // namespace ivd
