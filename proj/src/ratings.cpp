#include "ivd/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ivd/csv.hpp"

namespace ivd {
namespace {

struct RawRating {
  std::string user;
  std::string item;
  double value;
  std::size_t line;
};

bool is_integer_label(const std::string& s) {
  try {
    csv::parse_int(s);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

// Sorted distinct labels plus a lookup table into dense ids.
std::pair<std::vector<std::string>, std::unordered_map<std::string, int>> dense_labels(
    std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (std::all_of(labels.begin(), labels.end(), is_integer_label)) {
    std::sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return csv::parse_int(a) < csv::parse_int(b);
    });
  }
  std::unordered_map<std::string, int> index;
  index.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) index.emplace(labels[i], static_cast<int>(i));
  return {std::move(labels), std::move(index)};
}

void build_index(std::size_t n, const std::vector<Rating>& entries, bool by_user,
                 std::vector<std::size_t>& offsets, std::vector<std::size_t>& index) {
  offsets.assign(n + 1, 0);
  for (const auto& e : entries) ++offsets[static_cast<std::size_t>(by_user ? e.user : e.item) + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  index.resize(entries.size());
  auto cursor = offsets;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto key = static_cast<std::size_t>(by_user ? entries[k].user : entries[k].item);
    index[cursor[key]++] = k;
  }
  for (std::size_t r = 0; r < n; ++r) {
    std::sort(index.begin() + static_cast<std::ptrdiff_t>(offsets[r]),
              index.begin() + static_cast<std::ptrdiff_t>(offsets[r + 1]),
              [&](std::size_t a, std::size_t b) {
                return by_user ? entries[a].item < entries[b].item
                               : entries[a].user < entries[b].user;
              });
  }
}

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = std::to_string(i);
  return labels;
}

}  // namespace

RatingsFormat parse_ratings_format(std::string_view name) {
  if (name == "ml100k") return RatingsFormat::ml100k;
  if (name == "ml1m") return RatingsFormat::ml1m;
  if (name == "csv") return RatingsFormat::csv;
  throw ConfigError("unknown ratings format '" + std::string(name) +
                    "' (expected ml100k, ml1m or csv)");
}

std::string_view to_string(RatingsFormat format) {
  switch (format) {
    case RatingsFormat::ml100k: return "ml100k";
    case RatingsFormat::ml1m: return "ml1m";
    case RatingsFormat::csv: return "csv";
  }
  return "?";
}

RatingsMatrix::RatingsMatrix(int n_users, int n_items, std::vector<Rating> entries, double r_min,
                             double r_max, std::vector<std::string> user_labels,
                             std::vector<std::string> item_labels)
    : n_users_(n_users),
      n_items_(n_items),
      r_min_(r_min),
      r_max_(r_max),
      entries_(std::move(entries)),
      user_labels_(std::move(user_labels)),
      item_labels_(std::move(item_labels)) {
  if (n_users < 0 || n_items < 0) throw ValidationError("negative matrix dimensions");
  if (!(r_min < r_max)) throw ValidationError("rating scale requires r_min < r_max");
  if (user_labels_.empty()) user_labels_ = default_labels(n_users);
  if (item_labels_.empty()) item_labels_ = default_labels(n_items);
  if (user_labels_.size() != static_cast<std::size_t>(n_users) ||
      item_labels_.size() != static_cast<std::size_t>(n_items)) {
    throw ValidationError("label tables do not match matrix dimensions");
  }
  for (const auto& e : entries_) {
    if (e.user < 0 || e.user >= n_users || e.item < 0 || e.item >= n_items) {
      throw ValidationError("rating (" + std::to_string(e.user) + ", " + std::to_string(e.item) +
                            ") outside " + std::to_string(n_users) + "x" +
                            std::to_string(n_items) + " matrix");
    }
    if (!(e.value >= r_min && e.value <= r_max)) {
      throw ValidationError("rating " + csv::format_double(e.value) + " outside scale [" +
                            csv::format_double(r_min) + ", " + csv::format_double(r_max) + "]");
    }
  }
  build_index(static_cast<std::size_t>(n_users), entries_, true, user_offsets_, user_index_);
  build_index(static_cast<std::size_t>(n_items), entries_, false, item_offsets_, item_index_);
  for (int u = 0; u < n_users; ++u) {
    const auto list = user_entries(u);
    for (std::size_t k = 1; k < list.size(); ++k) {
      if (entries_[list[k]].item == entries_[list[k - 1]].item) {
        throw ValidationError("duplicate rating for user " + user_labels_[static_cast<std::size_t>(u)] +
                              ", item " +
                              item_labels_[static_cast<std::size_t>(entries_[list[k]].item)]);
      }
    }
  }
}

std::span<const std::size_t> RatingsMatrix::user_entries(UserId user) const {
  const auto u = static_cast<std::size_t>(user);
  return std::span<const std::size_t>(user_index_).subspan(user_offsets_[u],
                                                           user_offsets_[u + 1] - user_offsets_[u]);
}

std::span<const std::size_t> RatingsMatrix::item_entries(ItemId item) const {
  const auto j = static_cast<std::size_t>(item);
  return std::span<const std::size_t>(item_index_).subspan(item_offsets_[j],
                                                           item_offsets_[j + 1] - item_offsets_[j]);
}

std::optional<double> RatingsMatrix::rating(UserId user, ItemId item) const {
  if (user < 0 || user >= n_users_ || item < 0 || item >= n_items_) return std::nullopt;
  const auto list = user_entries(user);
  const auto it = std::lower_bound(list.begin(), list.end(), item, [&](std::size_t k, ItemId j) {
    return entries_[k].item < j;
  });
  if (it == list.end() || entries_[*it].item != item) return std::nullopt;
  return entries_[*it].value;
}

RatingsMatrix RatingsMatrix::with_appended_users(std::span<const std::vector<ItemRating>> profiles,
                                                 std::string_view label_prefix) const {
  auto entries = entries_;
  auto labels = user_labels_;
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const auto user = n_users_ + static_cast<int>(p);
    for (const auto& r : profiles[p]) entries.push_back({user, r.item, r.value});
    labels.push_back(std::string(label_prefix) + std::to_string(p));
  }
  return RatingsMatrix(n_users_ + static_cast<int>(profiles.size()), n_items_, std::move(entries),
                       r_min_, r_max_, std::move(labels), item_labels_);
}

bool operator==(const RatingsMatrix& a, const RatingsMatrix& b) {
  return a.n_users_ == b.n_users_ && a.n_items_ == b.n_items_ && a.r_min_ == b.r_min_ &&
         a.r_max_ == b.r_max_ && a.entries_ == b.entries_ && a.user_labels_ == b.user_labels_ &&
         a.item_labels_ == b.item_labels_;
}

RatingsMatrix parse_ratings(std::string_view text, RatingsFormat format,
                            std::string_view source_name) {
  const std::string source(source_name);
  double r_min = 1.0;
  double r_max = 5.0;
  std::vector<RawRating> raw;
  bool seen_header = format != RatingsFormat::csv;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = csv::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    switch (format) {
      case RatingsFormat::ml100k: fields = csv::split(line, "\t"); break;
      case RatingsFormat::ml1m: fields = csv::split(line, "::"); break;
      case RatingsFormat::csv: fields = csv::split(line, ","); break;
    }

    if (!seen_header) {
      seen_header = true;
      if (fields.size() != 3 || csv::trim(fields[0]) != "user" || csv::trim(fields[1]) != "item") {
        throw ParseError(source, line_no, "expected header 'user,item,rating'");
      }
      const auto rating_col = csv::split(csv::trim(fields[2]), ":");
      if (rating_col[0] != "rating" || (rating_col.size() != 1 && rating_col.size() != 3)) {
        throw ParseError(source, line_no, "expected rating column 'rating' or 'rating:LO:HI'");
      }
      if (rating_col.size() == 3) {
        try {
          r_min = csv::parse_double(rating_col[1]);
          r_max = csv::parse_double(rating_col[2]);
        } catch (const std::invalid_argument& e) {
          throw ParseError(source, line_no, std::string("bad scale: ") + e.what());
        }
        if (!(r_min < r_max)) throw ParseError(source, line_no, "scale requires LO < HI");
      }
      continue;
    }

    const std::size_t expected = format == RatingsFormat::csv ? 3 : 4;
    if (fields.size() != expected) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(fields.size()));
    }
    RawRating r;
    r.user = std::string(csv::trim(fields[0]));
    r.item = std::string(csv::trim(fields[1]));
    r.line = line_no;
    if (r.user.empty() || r.item.empty()) throw ParseError(source, line_no, "empty id");
    try {
      r.value = csv::parse_double(fields[2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
    raw.push_back(std::move(r));
  }
  if (!seen_header) throw ParseError(source, 1, "missing header 'user,item,rating'");

  std::vector<std::string> users;
  std::vector<std::string> items;
  users.reserve(raw.size());
  items.reserve(raw.size());
  for (const auto& r : raw) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  auto [user_labels, user_index] = dense_labels(std::move(users));
  auto [item_labels, item_index] = dense_labels(std::move(items));

  std::vector<Rating> entries;
  entries.reserve(raw.size());
  for (const auto& r : raw) {
    if (!(r.value >= r_min && r.value <= r_max)) {
      throw ValidationError(source + ":" + std::to_string(r.line) + ": rating " +
                            csv::format_double(r.value) + " outside scale [" +
                            csv::format_double(r_min) + ", " + csv::format_double(r_max) + "]");
    }
    entries.push_back({user_index.at(r.user), item_index.at(r.item), r.value});
  }
  const auto n_users = static_cast<int>(user_labels.size());
  const auto n_items = static_cast<int>(item_labels.size());
  return RatingsMatrix(n_users, n_items, std::move(entries), r_min, r_max, std::move(user_labels),
                       std::move(item_labels));
}

RatingsMatrix load_ratings(const std::filesystem::path& path, RatingsFormat format) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DataError("ratings file not found: " + path.string());
  }
  std::string text;
  try {
    text = csv::read_file(path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  return parse_ratings(text, format, path.string());
}

std::string to_csv(const RatingsMatrix& ratings) {
  std::ostringstream out;
  out << "user,item,rating";
  if (ratings.r_min() != 1.0 || ratings.r_max() != 5.0) {
    out << ':' << csv::format_double(ratings.r_min()) << ':' << csv::format_double(ratings.r_max());
  }
  out << '\n';
  for (const auto& e : ratings.entries()) {
    out << ratings.user_labels()[static_cast<std::size_t>(e.user)] << ','
        << ratings.item_labels()[static_cast<std::size_t>(e.item)] << ','
        << csv::format_double(e.value) << '\n';
  }
  return out.str();
}

void save_csv(const RatingsMatrix& ratings, const std::filesystem::path& path) {
  csv::write_file(path, to_csv(ratings));
}

RatingsMatrix dense_subset(const RatingsMatrix& ratings, int n_items, int n_users) {
  if (n_items < 1 || n_users < 1) throw ConfigError("dense_subset needs positive sizes");

  std::vector<ItemId> items(static_cast<std::size_t>(ratings.n_items()));
  std::iota(items.begin(), items.end(), 0);
  std::stable_sort(items.begin(), items.end(), [&](ItemId a, ItemId b) {
    return ratings.item_entries(a).size() > ratings.item_entries(b).size();
  });
  items.resize(std::min(items.size(), static_cast<std::size_t>(n_items)));
  std::vector<char> keep_item(static_cast<std::size_t>(ratings.n_items()), 0);
  for (auto j : items) keep_item[static_cast<std::size_t>(j)] = 1;

  std::vector<int> counts(static_cast<std::size_t>(ratings.n_users()), 0);
  for (const auto& e : ratings.entries()) {
    if (keep_item[static_cast<std::size_t>(e.item)]) ++counts[static_cast<std::size_t>(e.user)];
  }
  std::vector<UserId> users(static_cast<std::size_t>(ratings.n_users()));
  std::iota(users.begin(), users.end(), 0);
  std::stable_sort(users.begin(), users.end(), [&](UserId a, UserId b) {
    return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
  });
  users.resize(std::min(users.size(), static_cast<std::size_t>(n_users)));

  // Renumber in original id order so the subset keeps the source ordering.
  std::sort(items.begin(), items.end());
  std::sort(users.begin(), users.end());
  std::vector<int> item_map(static_cast<std::size_t>(ratings.n_items()), -1);
  std::vector<int> user_map(static_cast<std::size_t>(ratings.n_users()), -1);
  std::vector<std::string> item_labels;
  std::vector<std::string> user_labels;
  for (std::size_t k = 0; k < items.size(); ++k) {
    item_map[static_cast<std::size_t>(items[k])] = static_cast<int>(k);
    item_labels.push_back(ratings.item_labels()[static_cast<std::size_t>(items[k])]);
  }
  for (std::size_t k = 0; k < users.size(); ++k) {
    user_map[static_cast<std::size_t>(users[k])] = static_cast<int>(k);
    user_labels.push_back(ratings.user_labels()[static_cast<std::size_t>(users[k])]);
  }
  std::vector<Rating> entries;
  for (const auto& e : ratings.entries()) {
    const auto u = user_map[static_cast<std::size_t>(e.user)];
    const auto j = item_map[static_cast<std::size_t>(e.item)];
    if (u >= 0 && j >= 0) entries.push_back({u, j, e.value});
  }
  return RatingsMatrix(static_cast<int>(users.size()), static_cast<int>(items.size()),
                       std::move(entries), ratings.r_min(), ratings.r_max(), std::move(user_labels),
                       std::move(item_labels));
}

}  // namespace ivd
