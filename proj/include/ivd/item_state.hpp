#pragma once

#include <vector>

#include <Eigen/Core>

#include "ivd/common.hpp"
#include "ivd/factor_model.hpp"
#include "ivd/ratings.hpp"

namespace ivd {

enum class BlockLabel { genuine, attack };

std::string_view to_string(BlockLabel label);

/// A batch of new ratings for one item: column k of X is the factor vector
/// of the user who gave rating y(k). `label` is evaluation ground truth and
/// is never consulted by a detector.
struct RatingBlock {
  ItemId item = 0;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<UserId> users;
  BlockLabel label = BlockLabel::genuine;

  int size() const { return static_cast<int>(y.size()); }

  /// Throws ValidationError if the shapes disagree, the block is empty or a
  /// rating lies outside [r_min, r_max].
  void validate(int rank, double r_min, double r_max) const;
};

/// Cached inverse Gram matrix and solved vector for one item.
///
/// a_inv = (sum_{i rated item} U_i U_i^T + lambda I)^{-1}, kept symmetric and
/// positive definite; v is the matching ridge solution.
struct ItemVectorState {
  ItemId item = 0;
  double lambda = 0.1;
  Eigen::MatrixXd a_inv;
  Eigen::VectorXd v;
  int rater_count = 0;

  int rank() const { return static_cast<int>(v.size()); }

  static ItemVectorState empty(ItemId item, int rank, double lambda);
};

/// State from explicit rater factors (columns) and their ratings.
ItemVectorState build_item_state(ItemId item, const Eigen::Ref<const Eigen::MatrixXd>& raters,
                                 const Eigen::Ref<const Eigen::VectorXd>& ratings, double lambda);

/// State from every rating of `item` in `ratings`, using the model's user factors.
ItemVectorState build_item_state(const FactorModel& model, const RatingsMatrix& ratings,
                                 ItemId item);

struct ItemUpdate {
  Eigen::VectorXd v_hat;
  ItemVectorState next;
};

/// Rank-m update for a block of new raters X (d x m) with ratings y:
///   v_hat = v + A^{-1} X (I + X^T A^{-1} X)^{-1} (y - X^T v)
///   A_hat^{-1} = A^{-1} - A^{-1} X (I + X^T A^{-1} X)^{-1} X^T A^{-1}
/// The input state is untouched; committing `next` is up to the caller.
/// Throws NumericalError if the m x m capacitance matrix cannot be factored
/// or the result is not finite.
ItemUpdate woodbury_update(const ItemVectorState& state, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y);

inline ItemUpdate woodbury_update(const ItemVectorState& state, const RatingBlock& block) {
  return woodbury_update(state, block.X, block.y);
}

/// Single new rater via the rank-1 formula.
ItemUpdate sherman_morrison_update(const ItemVectorState& state,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, double y);

/// (M + u w^T)^{-1} from M^{-1}.
Eigen::MatrixXd sherman_morrison_inverse(const Eigen::Ref<const Eigen::MatrixXd>& m_inv,
                                         const Eigen::Ref<const Eigen::VectorXd>& u,
                                         const Eigen::Ref<const Eigen::VectorXd>& w);

/// (M + U W^T)^{-1} from M^{-1} for n x k perturbation factors U and W.
Eigen::MatrixXd woodbury_inverse(const Eigen::Ref<const Eigen::MatrixXd>& m_inv,
                                 const Eigen::Ref<const Eigen::MatrixXd>& u,
                                 const Eigen::Ref<const Eigen::MatrixXd>& w);

}  // namespace ivd
