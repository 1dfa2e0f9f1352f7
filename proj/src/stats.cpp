#include "ivd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ivd/csv.hpp"

namespace ivd {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool label_less(const std::string& a, const std::string& b) {
  try {
    return csv::parse_int(a) < csv::parse_int(b);
  } catch (const std::invalid_argument&) {
    return a < b;
  }
}

}  // namespace

ItemStats compute_stats(const RatingsMatrix& ratings) {
  ItemStats s;
  s.r_min = ratings.r_min();
  s.r_max = ratings.r_max();
  const auto m = static_cast<std::size_t>(ratings.n_items());
  s.item_mean.assign(m, kNaN);
  s.item_std.assign(m, kNaN);
  s.item_count.assign(m, 0);

  if (ratings.empty()) {
    s.global_mean = kNaN;
    s.global_std = kNaN;
  } else {
    double sum = 0.0;
    for (const auto& e : ratings.entries()) sum += e.value;
    s.global_mean = sum / static_cast<double>(ratings.size());
    double sq = 0.0;
    for (const auto& e : ratings.entries()) sq += (e.value - s.global_mean) * (e.value - s.global_mean);
    s.global_std = std::sqrt(sq / static_cast<double>(ratings.size()));
  }

  for (ItemId j = 0; j < ratings.n_items(); ++j) {
    const auto list = ratings.item_entries(j);
    const auto idx = static_cast<std::size_t>(j);
    s.item_count[idx] = static_cast<int>(list.size());
    if (list.empty()) continue;
    double sum = 0.0;
    for (const auto k : list) sum += ratings.entries()[k].value;
    const double mean = sum / static_cast<double>(list.size());
    double sq = 0.0;
    for (const auto k : list) sq += (ratings.entries()[k].value - mean) * (ratings.entries()[k].value - mean);
    s.item_mean[idx] = mean;
    s.item_std[idx] = list.size() <= 1 ? 0.0 : std::sqrt(sq / static_cast<double>(list.size()));
  }

  s.popularity_rank.resize(m);
  std::iota(s.popularity_rank.begin(), s.popularity_rank.end(), 0);
  std::stable_sort(s.popularity_rank.begin(), s.popularity_rank.end(), [&](ItemId a, ItemId b) {
    return s.item_count[static_cast<std::size_t>(a)] > s.item_count[static_cast<std::size_t>(b)];
  });
  return s;
}

ItemStats compute_stats(const RatingsMatrix& ratings, const ClusterModel& clusters) {
  auto s = compute_stats(ratings);
  if (clusters.n_users() < ratings.n_users()) {
    throw ValidationError("cluster assignment covers " + std::to_string(clusters.n_users()) +
                          " users, ratings have " + std::to_string(ratings.n_users()));
  }
  const auto k = clusters.k();
  const auto m = ratings.n_items();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, m);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(k, m);
  s.cluster_item_count = Eigen::MatrixXi::Zero(k, m);
  for (const auto& e : ratings.entries()) {
    const auto g = clusters.group_of(e.user);
    sum(g, e.item) += e.value;
    s.cluster_item_count(g, e.item) += 1;
  }
  s.cluster_item_mean = Eigen::MatrixXd::Constant(k, m, kNaN);
  for (int g = 0; g < k; ++g) {
    for (int j = 0; j < m; ++j) {
      if (s.cluster_item_count(g, j) > 0) s.cluster_item_mean(g, j) = sum(g, j) / s.cluster_item_count(g, j);
    }
  }
  for (const auto& e : ratings.entries()) {
    const auto g = clusters.group_of(e.user);
    const double dev = e.value - s.cluster_item_mean(g, e.item);
    sq(g, e.item) += dev * dev;
  }
  s.cluster_item_std = Eigen::MatrixXd::Constant(k, m, kNaN);
  for (int g = 0; g < k; ++g) {
    for (int j = 0; j < m; ++j) {
      const int c = s.cluster_item_count(g, j);
      if (c == 1) s.cluster_item_std(g, j) = 0.0;
      if (c > 1) s.cluster_item_std(g, j) = std::sqrt(sq(g, j) / c);
    }
  }
  return s;
}

void TargetCriteria::validate() const {
  if (!std::isfinite(max_cluster_mean)) throw ConfigError("max_cluster_mean must be finite");
  if (min_ratings_per_cluster < 1) throw ConfigError("min_ratings_per_cluster must be >= 1");
}

bool is_eligible_target(const ItemStats& stats, ItemId item, const TargetCriteria& criteria) {
  if (stats.n_groups() == 0) throw ValidationError("target eligibility needs per-group statistics");
  if (item < 0 || item >= stats.n_items()) return false;
  for (int g = 0; g < stats.n_groups(); ++g) {
    const int count = stats.cluster_item_count(g, item);
    if (count < criteria.min_ratings_per_cluster) return false;
    if (count > 0 && !(stats.cluster_item_mean(g, item) < criteria.max_cluster_mean)) return false;
  }
  return true;
}

std::vector<ItemId> eligible_targets(const RatingsMatrix& ratings, const ItemStats& stats,
                                     const TargetCriteria& criteria) {
  criteria.validate();
  std::vector<ItemId> out;
  for (ItemId j = 0; j < ratings.n_items(); ++j) {
    if (is_eligible_target(stats, j, criteria)) out.push_back(j);
  }
  const auto& labels = ratings.item_labels();
  std::sort(out.begin(), out.end(), [&](ItemId a, ItemId b) {
    return label_less(labels[static_cast<std::size_t>(a)], labels[static_cast<std::size_t>(b)]);
  });
  return out;
}

std::vector<ItemId> select_target_items(const RatingsMatrix& ratings, const ItemStats& stats,
                                        const TargetCriteria& criteria, int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("select_target_items needs n >= 1");
  auto pool = eligible_targets(ratings, stats, criteria);
  if (static_cast<int>(pool.size()) < n) {
    int enough_ratings = 0;
    int low_mean = 0;
    for (ItemId j = 0; j < ratings.n_items(); ++j) {
      bool counts_ok = true;
      bool means_ok = true;
      for (int g = 0; g < stats.n_groups(); ++g) {
        const int c = stats.cluster_item_count(g, j);
        counts_ok = counts_ok && c >= criteria.min_ratings_per_cluster;
        means_ok = means_ok && (c == 0 || stats.cluster_item_mean(g, j) < criteria.max_cluster_mean);
      }
      enough_ratings += counts_ok;
      low_mean += means_ok;
    }
    const std::string binding = enough_ratings <= low_mean
                                    ? "min_ratings_per_cluster=" + std::to_string(criteria.min_ratings_per_cluster)
                                    : "max_cluster_mean=" + csv::format_double(criteria.max_cluster_mean);
    throw EligibilityError((pool.empty() ? std::string("no eligible items") : std::string("too few eligible items")) +
                           ": need " + std::to_string(n) + ", found " + std::to_string(pool.size()) + " (" +
                           std::to_string(enough_ratings) + " items meet min_ratings_per_cluster, " +
                           std::to_string(low_mean) + " meet max_cluster_mean; binding constraint " +
                           binding + ")");
  }
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n slots become a uniform sample.
  for (int k = 0; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(n));
  return pool;
}

}  // namespace ivd
