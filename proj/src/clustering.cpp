#include "ivd/clustering.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>

#include "ivd/csv.hpp"

namespace ivd {
namespace {

std::vector<double> nearest_sq_dist(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                    const Eigen::MatrixXd& centroids, Eigen::Index used,
                                    std::vector<GroupId>* labels) {
  const auto n = points.cols();
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  if (labels) labels->assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index g = 0; g < used; ++g) {
      const double d2 = (points.col(i) - centroids.col(g)).squaredNorm();
      if (d2 < best[static_cast<std::size_t>(i)]) {
        best[static_cast<std::size_t>(i)] = d2;
        if (labels) (*labels)[static_cast<std::size_t>(i)] = static_cast<GroupId>(g);
      }
    }
  }
  return best;
}

Eigen::MatrixXd seed_plus_plus(const Eigen::Ref<const Eigen::MatrixXd>& points, int k,
                               std::mt19937_64& rng) {
  const auto n = points.cols();
  Eigen::MatrixXd centroids(points.rows(), k);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  auto pick = first(rng);
  centroids.col(0) = points.col(pick);
  taken[static_cast<std::size_t>(pick)] = 1;
  for (int c = 1; c < k; ++c) {
    auto weights = nearest_sq_dist(points, centroids, c, nullptr);
    double total = 0.0;
    for (const double w : weights) total += w;
    if (total > 0.0) {
      std::discrete_distribution<Eigen::Index> draw(weights.begin(), weights.end());
      pick = draw(rng);
    } else {
      // Every point coincides with a chosen centroid: take an unused index.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) free.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> any(0, free.size() - 1);
      pick = free[any(rng)];
    }
    centroids.col(c) = points.col(pick);
    taken[static_cast<std::size_t>(pick)] = 1;
  }
  return centroids;
}

}  // namespace

GroupId ClusterModel::group_of(UserId user) const {
  if (user < 0 || user >= n_users()) {
    throw ValidationError("user " + std::to_string(user) + " has no group assignment");
  }
  return assignment[static_cast<std::size_t>(user)];
}

std::vector<UserId> ClusterModel::members(GroupId group) const {
  std::vector<UserId> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == group) out.push_back(static_cast<UserId>(i));
  }
  return out;
}

ClusterModel kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const KMeansOptions& options) {
  const auto n = points.cols();
  if (options.k <= 0) throw ConfigError("k-means needs k >= 1");
  if (options.k > n) {
    throw ConfigError("k-means: k = " + std::to_string(options.k) + " exceeds " +
                      std::to_string(n) + " points");
  }
  if (options.max_iters < 1) throw ConfigError("k-means needs max_iters >= 1");
  if (!(options.tol > 0.0)) throw ConfigError("k-means needs tol > 0");

  std::mt19937_64 rng(options.seed);
  ClusterModel model;
  model.centroids = seed_plus_plus(points, options.k, rng);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    auto dist = nearest_sq_dist(points, model.centroids, options.k, &model.assignment);

    std::vector<int> counts(static_cast<std::size_t>(options.k), 0);
    for (const auto g : model.assignment) ++counts[static_cast<std::size_t>(g)];
    for (int g = 0; g < options.k; ++g) {
      if (counts[static_cast<std::size_t>(g)] > 0) continue;
      // Move the worst-served point (from a cluster that can spare it) into the empty one.
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto owner = model.assignment[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] < 2) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      const auto owner = model.assignment[static_cast<std::size_t>(far)];
      --counts[static_cast<std::size_t>(owner)];
      ++counts[static_cast<std::size_t>(g)];
      model.assignment[static_cast<std::size_t>(far)] = g;
      dist[static_cast<std::size_t>(far)] = 0.0;
      model.centroids.col(g) = points.col(far);
    }

    double total = 0.0;
    for (const double d2 : dist) total += d2;
    model.inertia_trace.push_back(total);

    Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(points.rows(), options.k);
    for (Eigen::Index i = 0; i < n; ++i) {
      updated.col(model.assignment[static_cast<std::size_t>(i)]) += points.col(i);
    }
    double movement = 0.0;
    for (int g = 0; g < options.k; ++g) {
      updated.col(g) /= static_cast<double>(counts[static_cast<std::size_t>(g)]);
      movement = std::max(movement, (updated.col(g) - model.centroids.col(g)).norm());
    }
    model.centroids = std::move(updated);
    model.iterations = iter + 1;
    if (movement < options.tol) break;
  }
  return model;
}

double inertia(const Eigen::Ref<const Eigen::MatrixXd>& points, const ClusterModel& clusters) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    total += (points.col(i) - clusters.centroids.col(clusters.group_of(static_cast<UserId>(i))))
                 .squaredNorm();
  }
  return total;
}

double group_predict(const ClusterModel& clusters, const Eigen::Ref<const Eigen::MatrixXd>& V,
                     UserId user, ItemId item) {
  const auto g = clusters.group_of(user);
  if (item < 0 || item >= V.cols()) throw ValidationError("unknown item " + std::to_string(item));
  if (V.rows() != clusters.rank()) throw ValidationError("item factors and centroids differ in rank");
  return clusters.centroids.col(g).dot(V.col(item));
}

double cluster_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                        const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) {
    throw ValidationError("distance between vectors of size " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()));
  }
  return (a - b).norm();
}

GroupId nearest_group(const ClusterModel& clusters, const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (u.size() != clusters.rank()) throw ValidationError("vector rank does not match centroids");
  GroupId best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int g = 0; g < clusters.k(); ++g) {
    const double d2 = (clusters.centroids.col(g) - u).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = g;
    }
  }
  return best;
}

void save_clusters(const ClusterModel& clusters, const std::filesystem::path& assignment_path,
                   const std::filesystem::path& centroids_path) {
  std::ostringstream a;
  a << "user,group\n";
  for (std::size_t i = 0; i < clusters.assignment.size(); ++i) {
    a << i << ',' << clusters.assignment[i] << '\n';
  }
  csv::write_file(assignment_path, a.str());

  std::ostringstream c;
  c << "group";
  for (int r = 0; r < clusters.rank(); ++r) c << ",c" << r;
  c << '\n';
  for (int g = 0; g < clusters.k(); ++g) {
    c << g;
    for (int r = 0; r < clusters.rank(); ++r) c << ',' << csv::format_double(clusters.centroids(r, g));
    c << '\n';
  }
  csv::write_file(centroids_path, c.str());
}

ClusterModel load_clusters(const std::filesystem::path& assignment_path,
                           const std::filesystem::path& centroids_path) {
  for (const auto& p : {assignment_path, centroids_path}) {
    if (!std::filesystem::is_regular_file(p)) throw StateError("cluster checkpoint not found: " + p.string());
  }
  const auto lines_of = [](const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!csv::trim(line).empty()) lines.push_back(line);
    }
    return lines;
  };

  ClusterModel model;
  const auto c_lines = lines_of(csv::read_file(centroids_path));
  if (c_lines.empty()) throw ParseError(centroids_path.string(), 1, "missing header");
  const auto rank = csv::split(csv::trim(c_lines[0]), ",").size() - 1;
  model.centroids.resize(static_cast<Eigen::Index>(rank), static_cast<Eigen::Index>(c_lines.size() - 1));
  for (std::size_t l = 1; l < c_lines.size(); ++l) {
    const auto fields = csv::split(csv::trim(c_lines[l]), ",");
    try {
      if (fields.size() != rank + 1 || csv::parse_int(fields[0]) != static_cast<long long>(l - 1)) {
        throw ParseError(centroids_path.string(), l + 1, "malformed centroid row");
      }
      for (std::size_t r = 0; r < rank; ++r) {
        model.centroids(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l - 1)) =
            csv::parse_double(fields[r + 1]);
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(centroids_path.string(), l + 1, e.what());
    }
  }

  const auto a_lines = lines_of(csv::read_file(assignment_path));
  for (std::size_t l = 1; l < a_lines.size(); ++l) {
    const auto fields = csv::split(csv::trim(a_lines[l]), ",");
    try {
      if (fields.size() != 2 || csv::parse_int(fields[0]) != static_cast<long long>(l - 1)) {
        throw ParseError(assignment_path.string(), l + 1, "malformed assignment row");
      }
      const auto g = csv::parse_int(fields[1]);
      if (g < 0 || g >= model.k()) throw ParseError(assignment_path.string(), l + 1, "group out of range");
      model.assignment.push_back(static_cast<GroupId>(g));
    } catch (const std::invalid_argument& e) {
      throw ParseError(assignment_path.string(), l + 1, e.what());
    }
  }
  return model;
}

}  // namespace ivd
