#include "ivd/attack.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ivd {

std::string_view to_string(AttackType type) {
  switch (type) {
    case AttackType::random: return "random";
    case AttackType::average: return "average";
    case AttackType::target_cluster: return "target_cluster";
  }
  return "?";
}

AttackType parse_attack_type(std::string_view name) {
  if (name == "random") return AttackType::random;
  if (name == "average") return AttackType::average;
  if (name == "target_cluster" || name == "target") return AttackType::target_cluster;
  throw ConfigError("unknown attack type '" + std::string(name) + "'");
}

void AttackScenario::validate() const {
  const auto fraction_ok = [](double f) { return f > 0.0 && f <= 1.0; };
  if (!fraction_ok(attack_size)) throw ConfigError("attack_size must be in (0, 1]");
  if (!fraction_ok(filler_size)) throw ConfigError("filler_size must be in (0, 1]");
  if (!(filler_top_pct > 0.0 && filler_top_pct <= 100.0)) {
    throw ConfigError("filler_top_pct must be in (0, 100]");
  }
  if (target_item < 0) throw ConfigError("target_item must be a dense item id");
  if (target_group < 0) throw ConfigError("target_group must be >= 0");
}

void to_json(nlohmann::json& j, const AttackScenario& s) {
  j = nlohmann::json{{"attack_type", std::string(to_string(s.attack_type))},
                     {"target_item", s.target_item},
                     {"target_group", s.target_group},
                     {"attack_size", s.attack_size},
                     {"filler_size", s.filler_size},
                     {"filler_top_pct", s.filler_top_pct},
                     {"obfuscate_target", s.obfuscate_target},
                     {"rng_seed", s.rng_seed}};
}

void from_json(const nlohmann::json& j, AttackScenario& s) {
  static const std::set<std::string> known = {"attack_type",  "target_item",    "target_group",
                                              "attack_size",  "filler_size",    "filler_top_pct",
                                              "obfuscate_target", "rng_seed"};
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown scenario field '" + key + "'");
  }
  AttackScenario out;
  try {
    if (j.contains("attack_type")) out.attack_type = parse_attack_type(j.at("attack_type").get<std::string>());
    if (j.contains("target_item")) out.target_item = j.at("target_item").get<ItemId>();
    if (j.contains("target_group")) out.target_group = j.at("target_group").get<GroupId>();
    if (j.contains("attack_size")) out.attack_size = j.at("attack_size").get<double>();
    if (j.contains("filler_size")) out.filler_size = j.at("filler_size").get<double>();
    if (j.contains("filler_top_pct")) out.filler_top_pct = j.at("filler_top_pct").get<double>();
    if (j.contains("obfuscate_target")) out.obfuscate_target = j.at("obfuscate_target").get<bool>();
    if (j.contains("rng_seed")) out.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario: ") + e.what());
  }
  out.validate();
  s = out;
}

std::vector<ItemRating> FakeProfile::ratings() const {
  std::vector<ItemRating> out;
  out.reserve(fillers.size() + 1);
  out.push_back({target_item, target_rating});
  out.insert(out.end(), fillers.begin(), fillers.end());
  return out;
}

int scaled_count(double fraction, int total) {
  return static_cast<int>(std::ceil(fraction * static_cast<double>(total) - 1e-9));
}

int filler_pool_size(double top_pct, int n_items) {
  return std::min(n_items, scaled_count(top_pct / 100.0, n_items));
}

namespace {

// The filler_pool_size most popular items that are not in `exclude`, in
// popularity order. An excluded item inside the cut is replaced by the next
// item down the ranking, so the pool size does not depend on the target.
std::vector<ItemId> filler_pool(const ItemStats& stats, double top_pct,
                                std::span<const ItemId> exclude) {
  const auto size = static_cast<std::size_t>(filler_pool_size(top_pct, stats.n_items()));
  std::vector<ItemId> pool;
  pool.reserve(size);
  for (std::size_t r = 0; r < stats.popularity_rank.size() && pool.size() < size; ++r) {
    const auto j = stats.popularity_rank[r];
    if (std::find(exclude.begin(), exclude.end(), j) == exclude.end()) pool.push_back(j);
  }
  return pool;
}

// Uniform draws without replacement, accepting only items that pass `usable`.
template <typename Pred>
std::vector<ItemId> draw_from_pool(std::vector<ItemId> pool, int count, std::mt19937_64& rng,
                                   Pred usable) {
  std::vector<ItemId> out;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t next = 0;
  while (static_cast<int>(out.size()) < count) {
    if (next >= pool.size()) {
      throw EligibilityError("filler pool exhausted: needed " + std::to_string(count) +
                             " usable items, found " + std::to_string(out.size()));
    }
    std::uniform_int_distribution<std::size_t> pick(next, pool.size() - 1);
    std::swap(pool[next], pool[pick(rng)]);
    if (usable(pool[next])) out.push_back(pool[next]);
    ++next;
  }
  return out;
}

}  // namespace

std::vector<ItemId> select_fillers(const ItemStats& stats, double top_pct, int count,
                                   std::span<const ItemId> exclude, std::uint64_t seed) {
  if (count < 0) throw ConfigError("filler count must be >= 0");
  auto pool = filler_pool(stats, top_pct, exclude);
  if (static_cast<int>(pool.size()) < count) {
    throw EligibilityError("filler pool too small: top " + std::to_string(top_pct) + "% gives " +
                           std::to_string(pool.size()) + " candidates, need " + std::to_string(count));
  }
  std::mt19937_64 rng(seed);
  return draw_from_pool(std::move(pool), count, rng, [](ItemId) { return true; });
}

FillerDraw sample_filler_rating(double mean, double std_dev, double r_min, double r_max,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> normal(mean, std_dev);
  FillerDraw d;
  d.raw = std_dev > 0.0 ? normal(rng) : mean;
  d.rating = std::clamp(std::round(d.raw), r_min, r_max);
  return d;
}

std::vector<FakeProfile> forge_profiles(const AttackScenario& scenario, const ItemStats& stats,
                                        int n_genuine_users) {
  scenario.validate();
  if (scenario.target_item >= stats.n_items()) throw ConfigError("target_item outside the catalogue");
  const bool per_group = scenario.attack_type == AttackType::target_cluster;
  if (per_group && scenario.target_group >= stats.n_groups()) {
    throw ConfigError("target_cluster attack needs per-group statistics for group " +
                      std::to_string(scenario.target_group));
  }
  const int n_profiles = scaled_count(scenario.attack_size, n_genuine_users);
  const int n_fillers = scaled_count(scenario.filler_size, stats.n_items());
  const ItemId exclude[] = {scenario.target_item};
  const auto pool = filler_pool(stats, scenario.filler_top_pct, exclude);
  if (static_cast<int>(pool.size()) < n_fillers) {
    throw EligibilityError("filler pool too small: " + std::to_string(pool.size()) +
                           " candidates for " + std::to_string(n_fillers) + " fillers");
  }

  const auto g = scenario.target_group;
  const auto fallback_std = [&](int count, double std_dev) {
    return count > 1 ? std_dev : stats.global_std;
  };
  const auto usable = [&](ItemId j) {
    switch (scenario.attack_type) {
      case AttackType::random: return true;
      case AttackType::average: return stats.has_item_mean(j);
      case AttackType::target_cluster: return stats.has_cluster_mean(g, j);
    }
    return false;
  };

  std::vector<FakeProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(n_profiles));
  for (int p = 0; p < n_profiles; ++p) {
    std::mt19937_64 rng(derive_seed(scenario.rng_seed, SeedStream::attack, static_cast<std::uint64_t>(p)));
    FakeProfile profile;
    profile.target_item = scenario.target_item;
    profile.target_rating = scenario.obfuscate_target ? stats.r_max - 1.0 : stats.r_max;
    for (const auto j : draw_from_pool(pool, n_fillers, rng, usable)) {
      const auto idx = static_cast<std::size_t>(j);
      double mean = stats.global_mean;
      double std_dev = stats.global_std;
      if (scenario.attack_type == AttackType::average) {
        mean = stats.item_mean[idx];
        std_dev = fallback_std(stats.item_count[idx], stats.item_std[idx]);
      } else if (per_group) {
        mean = stats.cluster_item_mean(g, j);
        std_dev = fallback_std(stats.cluster_item_count(g, j), stats.cluster_item_std(g, j));
      }
      const auto draw = sample_filler_rating(mean, std_dev, stats.r_min, stats.r_max, rng);
      profile.fillers.push_back({j, draw.rating});
    }
    std::sort(profile.fillers.begin(), profile.fillers.end(),
              [](const ItemRating& a, const ItemRating& b) { return a.item < b.item; });
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

RatingBlock gen_genuine_block(const RatingsMatrix& ratings, const FactorModel& model,
                              const ClusterModel& clusters, GroupId group, ItemId target_item,
                              int m, std::uint64_t seed) {
  if (m < 1) throw ValidationError("a rating block needs m >= 1");
  if (group < 0 || group >= clusters.k()) throw ValidationError("unknown group " + std::to_string(group));
  const auto members = clusters.members(group);
  std::vector<double> in_group_ratings;
  for (const auto k : ratings.item_entries(target_item)) {
    const auto& e = ratings.entries()[k];
    if (clusters.group_of(e.user) == group) in_group_ratings.push_back(e.value);
  }
  if (in_group_ratings.empty()) {
    throw EligibilityError("group " + std::to_string(group) + " has no rater of item " +
                           std::to_string(target_item));
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_member(0, members.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_rater(0, in_group_ratings.size() - 1);
  RatingBlock block;
  block.item = target_item;
  block.label = BlockLabel::genuine;
  block.X.resize(model.rank(), m);
  block.y.resize(m);
  for (int k = 0; k < m; ++k) {
    const auto user = members[pick_member(rng)];
    const auto own = ratings.rating(user, target_item);
    block.y(k) = own ? *own : in_group_ratings[pick_rater(rng)];
    block.X.col(k) = model.U.col(user);
    block.users.push_back(user);
  }
  return block;
}

Eigen::MatrixXd proxy_factors(std::span<const FakeProfile> profiles, const FactorModel& model) {
  Eigen::MatrixXd out(model.rank(), static_cast<Eigen::Index>(profiles.size()));
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    out.col(static_cast<Eigen::Index>(p)) = fold_in_user(model, profiles[p].fillers);
  }
  return out;
}

std::vector<RatingBlock> block_from_profiles(std::span<const FakeProfile> profiles,
                                             const FactorModel& model, ItemId target_item,
                                             int block_size, UserId first_user_id) {
  if (block_size < 1) throw ConfigError("block_size must be >= 1");
  std::vector<RatingBlock> blocks;
  const auto proxies = proxy_factors(profiles, model);
  for (std::size_t start = 0; start < profiles.size(); start += static_cast<std::size_t>(block_size)) {
    const auto len = std::min(profiles.size() - start, static_cast<std::size_t>(block_size));
    RatingBlock block;
    block.item = target_item;
    block.label = BlockLabel::attack;
    block.X = proxies.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
    block.y.resize(static_cast<Eigen::Index>(len));
    for (std::size_t k = 0; k < len; ++k) {
      block.y(static_cast<Eigen::Index>(k)) = profiles[start + k].target_rating;
      block.users.push_back(first_user_id + static_cast<UserId>(start + k));
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace ivd
