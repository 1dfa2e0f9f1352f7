#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ivd/clustering.hpp"
#include "ivd/common.hpp"
#include "ivd/factor_model.hpp"
#include "ivd/item_state.hpp"
#include "ivd/ratings.hpp"
#include "ivd/stats.hpp"

namespace ivd {

enum class AttackType { random, average, target_cluster };

std::string_view to_string(AttackType type);
AttackType parse_attack_type(std::string_view name);

struct AttackScenario {
  AttackType attack_type = AttackType::average;
  ItemId target_item = 0;
  GroupId target_group = 0;  // used by target_cluster only
  double attack_size = 0.05;     // fake profiles as a fraction of genuine users
  double filler_size = 0.10;     // fillers per profile as a fraction of the catalogue
  double filler_top_pct = 60.0;  // fillers come from the top x% most rated items
  bool obfuscate_target = false;
  std::uint64_t rng_seed = 0;

  void validate() const;

  friend bool operator==(const AttackScenario&, const AttackScenario&) = default;
};

// Scenario files carry exactly the fields above; unknown keys are rejected.
void to_json(nlohmann::json& j, const AttackScenario& s);
void from_json(const nlohmann::json& j, AttackScenario& s);

struct FakeProfile {
  ItemId target_item = 0;
  double target_rating = 0.0;
  std::vector<ItemRating> fillers;

  /// Target rating first, then fillers.
  std::vector<ItemRating> ratings() const;
};

/// ceil(fraction * total), robust to representation error in the product.
int scaled_count(double fraction, int total);

/// Number of candidates in the top-`top_pct`% popularity pool.
int filler_pool_size(double top_pct, int n_items);

/// `count` distinct items drawn uniformly from the top-`top_pct`% most rated
/// items, skipping anything in `exclude`. Throws EligibilityError if the
/// pool is too small.
std::vector<ItemId> select_fillers(const ItemStats& stats, double top_pct, int count,
                                   std::span<const ItemId> exclude, std::uint64_t seed);

struct FillerDraw {
  double raw;     // the Normal draw before rounding
  double rating;  // rounded to the nearest scale step and clipped
};

FillerDraw sample_filler_rating(double mean, double std_dev, double r_min, double r_max,
                                std::mt19937_64& rng);

/// ceil(attack_size * n_genuine_users) profiles, each with one target rating
/// (r_max, or r_max - 1 when obfuscated) and ceil(filler_size * n_items)
/// filler ratings drawn around the global mean (random), the item mean
/// (average) or the target group's item mean (target_cluster).
std::vector<FakeProfile> forge_profiles(const AttackScenario& scenario, const ItemStats& stats,
                                        int n_genuine_users);

/// Simulated genuine block: m draws of a member of `group`. A member who
/// rated the target contributes their own rating; otherwise the rating of a
/// second, randomly chosen in-group rater is spliced in. X holds the first
/// user's factors.
RatingBlock gen_genuine_block(const RatingsMatrix& ratings, const FactorModel& model,
                              const ClusterModel& clusters, GroupId group, ItemId target_item,
                              int m, std::uint64_t seed);

/// Fake users' factor vectors, folded in from their filler ratings against the current V.
Eigen::MatrixXd proxy_factors(std::span<const FakeProfile> profiles, const FactorModel& model);

/// Consecutive blocks of `block_size` profiles (the last may be shorter).
/// Fake users get ids first_user_id, first_user_id + 1, ...
std::vector<RatingBlock> block_from_profiles(std::span<const FakeProfile> profiles,
                                             const FactorModel& model, ItemId target_item,
                                             int block_size, UserId first_user_id);

}  // namespace ivd
