#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivd/common.hpp"

namespace ivd {

struct Rating {
  UserId user = 0;
  ItemId item = 0;
  double value = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct ItemRating {
  ItemId item = 0;
  double value = 0.0;

  friend bool operator==(const ItemRating&, const ItemRating&) = default;
};

enum class RatingsFormat { ml100k, ml1m, csv };

RatingsFormat parse_ratings_format(std::string_view name);
std::string_view to_string(RatingsFormat format);

/// Sparse user x item rating matrix over dense 0-based ids.
///
/// Entries keep their insertion order; per-user and per-item index lists are
/// sorted by the other coordinate so lookups are a binary search. Labels map
/// dense ids back to the ids used in the source file.
class RatingsMatrix {
 public:
  RatingsMatrix() = default;

  /// Throws ValidationError on out-of-range ids, off-scale values or a
  /// repeated (user, item) pair.
  RatingsMatrix(int n_users, int n_items, std::vector<Rating> entries, double r_min = 1.0,
                double r_max = 5.0, std::vector<std::string> user_labels = {},
                std::vector<std::string> item_labels = {});

  int n_users() const { return n_users_; }
  int n_items() const { return n_items_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

  std::span<const Rating> entries() const { return entries_; }

  /// Indices into entries() for one user (sorted by item) or one item (sorted by user).
  std::span<const std::size_t> user_entries(UserId user) const;
  std::span<const std::size_t> item_entries(ItemId item) const;

  std::optional<double> rating(UserId user, ItemId item) const;

  const std::vector<std::string>& user_labels() const { return user_labels_; }
  const std::vector<std::string>& item_labels() const { return item_labels_; }

  /// Appends one new user per profile (labels `<prefix><index>`); items and scale unchanged.
  RatingsMatrix with_appended_users(std::span<const std::vector<ItemRating>> profiles,
                                    std::string_view label_prefix = "fake_") const;

  friend bool operator==(const RatingsMatrix& a, const RatingsMatrix& b);

 private:
  int n_users_ = 0;
  int n_items_ = 0;
  double r_min_ = 1.0;
  double r_max_ = 5.0;
  std::vector<Rating> entries_;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<std::size_t> user_index_;
  std::vector<std::size_t> item_offsets_{0};
  std::vector<std::size_t> item_index_;
  std::vector<std::string> user_labels_;
  std::vector<std::string> item_labels_;
};

/// Parses ML-100k `u.data` (tab separated), ML-1M `ratings.dat` ("::"
/// separated) or a CSV with header `user,item,rating`. A CSV rating column
/// may declare its scale as `rating:LO:HI`; otherwise the scale is [1, 5].
/// Dense ids follow the sorted source labels (numeric order when every
/// label is an integer).
RatingsMatrix load_ratings(const std::filesystem::path& path, RatingsFormat format);
RatingsMatrix parse_ratings(std::string_view text, RatingsFormat format,
                            std::string_view source_name = "<memory>");

/// Canonical CSV dump: labels and 17-significant-digit values, entries in storage order.
std::string to_csv(const RatingsMatrix& ratings);
void save_csv(const RatingsMatrix& ratings, const std::filesystem::path& path);

/// Dense subset: the `n_items` most-rated items, then the `n_users` users
/// with the most ratings on those items. Ties break towards the lower id.
RatingsMatrix dense_subset(const RatingsMatrix& ratings, int n_items, int n_users);

}  // namespace ivd
