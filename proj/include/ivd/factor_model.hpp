#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ivd/common.hpp"
#include "ivd/ratings.hpp"

namespace ivd {

/// User factors U (d x n_users) and item factors V (d x n_items); column i
/// of U belongs to dense user id i, column j of V to dense item id j.
struct FactorModel {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  double lambda = 0.1;

  int rank() const { return static_cast<int>(U.rows()); }
  int n_users() const { return static_cast<int>(U.cols()); }
  int n_items() const { return static_cast<int>(V.cols()); }

  double predict(UserId user, ItemId item) const { return U.col(user).dot(V.col(item)); }

  /// Throws ValidationError unless rank >= 1, lambda > 0, U and V agree on
  /// rank and every entry is finite.
  void validate() const;

  friend bool operator==(const FactorModel&, const FactorModel&) = default;
};

struct AlsOptions {
  int rank = 16;
  double lambda = 0.1;
  int sweeps = 15;
  double init_std = 0.1;
  std::uint64_t seed = 0;
  // Rebalance U and V after every sweep (see balance_factors).
  bool balance = true;
  // Apply whiten_user_factors once training has finished.
  bool whiten_users = true;
};

/// Replaces (U, V) by (T U, T^{-T} V) for the invertible T that minimises
/// |T U|^2 + |T^{-T} V|^2. Every prediction U_i^T V_j is unchanged and
/// afterwards U U^T = V V^T, so the regularised objective can only drop.
/// Leaves the model untouched when either Gram matrix is singular.
void balance_factors(FactorModel& model);

/// Replaces (U, V) by (W U, W^{-T} V) so that the user second-moment matrix
/// (1/n) sum_i U_i U_i^T equals I / rank: user factors are isotropic with
/// unit mean squared norm. Predictions are unchanged. Distances between user
/// and item vectors (centroid to item, as used by IVD) depend on this choice,
/// unlike any prediction. Throws NumericalError if U U^T is singular.
void whiten_user_factors(FactorModel& model);

/// Sum of squared errors over observed entries plus lambda * (|U|^2 + |V|^2).
double objective(const RatingsMatrix& ratings, const FactorModel& model);

/// Alternating exact ridge solves. Each sweep refits every user column with V
/// fixed, then every item column with U fixed, so the objective never
/// increases. `objective_trace`, when given, receives the objective after
/// initialisation and after every sweep; the final whitening (if enabled)
/// happens after the last trace entry and changes only the penalty term.
FactorModel train_als(const RatingsMatrix& ratings, const AlsOptions& options,
                      std::vector<double>* objective_trace = nullptr);

/// Ridge solution (F F^T + lambda I)^{-1} F t for features F (d x m) and
/// targets t (m). With m = 0 this is the zero vector.
Eigen::VectorXd solve_ridge(const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::VectorXd>& targets, double lambda);

/// Closed-form item vector from its raters' factors (columns) and ratings.
inline Eigen::VectorXd solve_item_vector(const Eigen::Ref<const Eigen::MatrixXd>& rater_factors,
                                         const Eigen::Ref<const Eigen::VectorXd>& ratings,
                                         double lambda) {
  return solve_ridge(rater_factors, ratings, lambda);
}

/// Factor vector for a user outside the model: ridge fit of their ratings
/// against the fixed item factors.
Eigen::VectorXd fold_in_user(const FactorModel& model, std::span<const ItemRating> ratings);

/// Checkpoint as text: a version line, the scalar fields, then one row per
/// factor column, every value at 17 significant digits.
void save_model(const FactorModel& model, const std::filesystem::path& path);
FactorModel load_model(const std::filesystem::path& path);

}  // namespace ivd
