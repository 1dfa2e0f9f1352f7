#include "ivd/factor_model.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ivd/csv.hpp"

namespace ivd {
namespace {

constexpr std::string_view kModelHeader = "# ivd-factor-model v1";

// Refit every column of `solved` (one per row-entity) against the fixed
// `other` factors, using the entries listed for that entity.
template <typename EntryList, typename OtherIndex>
void ridge_sweep(const RatingsMatrix& ratings, Eigen::MatrixXd& solved,
                 const Eigen::MatrixXd& other, double lambda, EntryList entries_of,
                 OtherIndex other_of) {
  const auto d = solved.rows();
  Eigen::MatrixXd gram(d, d);
  Eigen::VectorXd rhs(d);
  for (Eigen::Index c = 0; c < solved.cols(); ++c) {
    const auto list = entries_of(static_cast<int>(c));
    if (list.empty()) {
      solved.col(c).setZero();
      continue;
    }
    gram.setZero();
    rhs.setZero();
    for (const auto k : list) {
      const auto& e = ratings.entries()[k];
      const auto f = other.col(other_of(e));
      gram.selfadjointView<Eigen::Lower>().rankUpdate(f);
      rhs.noalias() += e.value * f;
    }
    gram.diagonal().array() += lambda;
    solved.col(c) = gram.selfadjointView<Eigen::Lower>().llt().solve(rhs);
  }
}

}  // namespace

void FactorModel::validate() const {
  if (U.rows() < 1) throw ValidationError("factor model rank must be >= 1");
  if (U.rows() != V.rows()) throw ValidationError("U and V disagree on rank");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("factor model lambda must be positive");
  }
  if (!U.allFinite() || !V.allFinite()) throw ValidationError("factor model has non-finite entries");
}

double objective(const RatingsMatrix& ratings, const FactorModel& model) {
  double sse = 0.0;
  for (const auto& e : ratings.entries()) {
    const double r = e.value - model.predict(e.user, e.item);
    sse += r * r;
  }
  return sse + model.lambda * (model.U.squaredNorm() + model.V.squaredNorm());
}

FactorModel train_als(const RatingsMatrix& ratings, const AlsOptions& options,
                      std::vector<double>* objective_trace) {
  if (options.sweeps < 1) throw ConfigError("ALS needs at least one sweep");
  if (options.rank < 1) throw ConfigError("ALS rank must be >= 1");
  if (!(options.lambda > 0.0)) throw ConfigError("ALS lambda must be positive");
  if (ratings.empty()) throw ValidationError("cannot train on an empty ratings matrix");
  if (options.rank >= std::min(ratings.n_users(), ratings.n_items())) {
    std::cerr << "warning: rank " << options.rank << " >= min(n_users, n_items) = "
              << std::min(ratings.n_users(), ratings.n_items()) << "\n";
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, options.init_std);
  FactorModel model;
  model.lambda = options.lambda;
  model.U.resize(options.rank, ratings.n_users());
  model.V.resize(options.rank, ratings.n_items());
  for (Eigen::Index i = 0; i < model.U.size(); ++i) model.U.data()[i] = init(rng);
  for (Eigen::Index i = 0; i < model.V.size(); ++i) model.V.data()[i] = init(rng);

  if (objective_trace) {
    objective_trace->clear();
    objective_trace->push_back(objective(ratings, model));
  }
  for (int sweep = 0; sweep < options.sweeps; ++sweep) {
    ridge_sweep(
        ratings, model.U, model.V, model.lambda,
        [&](int u) { return ratings.user_entries(u); }, [](const Rating& e) { return e.item; });
    ridge_sweep(
        ratings, model.V, model.U, model.lambda,
        [&](int j) { return ratings.item_entries(j); }, [](const Rating& e) { return e.user; });
    if (options.balance) balance_factors(model);
    if (objective_trace) objective_trace->push_back(objective(ratings, model));
  }
  if (options.whiten_users) whiten_user_factors(model);
  return model;
}

void whiten_user_factors(FactorModel& model) {
  const auto d = model.rank();
  if (model.n_users() == 0) throw NumericalError("cannot whiten an empty user factor matrix");
  const Eigen::MatrixXd second_moment =
      (model.U * model.U.transpose()) * (static_cast<double>(d) / model.n_users());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second_moment);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 1e-12)) {
    throw NumericalError("user factors are rank deficient; cannot whiten");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseSqrt();
  const Eigen::MatrixXd qt = eig.eigenvectors().transpose();
  model.U = root.cwiseInverse().asDiagonal() * qt * model.U;
  model.V = root.asDiagonal() * qt * model.V;
}

void balance_factors(FactorModel& model) {
  const Eigen::MatrixXd user_gram = model.U * model.U.transpose();
  const Eigen::MatrixXd item_gram = model.V * model.V.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(user_gram);
  if (llt.info() != Eigen::Success) return;
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd m = L.transpose() * item_gram * L;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success) return;
  const Eigen::VectorXd mu = eig.eigenvalues();
  if (!(mu.minCoeff() > 1e-12 * std::max(1.0, mu.maxCoeff()))) return;
  const Eigen::VectorXd quarter = mu.array().pow(0.25);
  // T = diag(mu^1/4) W^T L^-1 and T^-T = diag(mu^-1/4) W^T L^T.
  const Eigen::MatrixXd wt = eig.eigenvectors().transpose();
  const Eigen::MatrixXd t =
      quarter.asDiagonal() * L.triangularView<Eigen::Lower>().solve<Eigen::OnTheRight>(wt);
  const Eigen::MatrixXd t_inv_t = quarter.cwiseInverse().asDiagonal() * wt * L.transpose();
  model.U = t * model.U;
  model.V = t_inv_t * model.V;
}

Eigen::VectorXd solve_ridge(const Eigen::Ref<const Eigen::MatrixXd>& features,
                            const Eigen::Ref<const Eigen::VectorXd>& targets, double lambda) {
  if (!(lambda > 0.0)) throw NumericalError("ridge solve needs lambda > 0");
  if (features.cols() != targets.size()) {
    throw ValidationError("ridge solve: feature columns and targets differ in count");
  }
  const auto d = features.rows();
  if (features.cols() == 0) return Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(d, d) * lambda;
  gram.selfadjointView<Eigen::Lower>().rankUpdate(features);
  const Eigen::VectorXd rhs = features * targets;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalError("ridge normal matrix not positive definite");
  return llt.solve(rhs);
}

Eigen::VectorXd fold_in_user(const FactorModel& model, std::span<const ItemRating> ratings) {
  Eigen::MatrixXd features(model.rank(), static_cast<Eigen::Index>(ratings.size()));
  Eigen::VectorXd targets(static_cast<Eigen::Index>(ratings.size()));
  for (std::size_t k = 0; k < ratings.size(); ++k) {
    const auto j = ratings[k].item;
    if (j < 0 || j >= model.n_items()) throw ValidationError("fold-in: unknown item id");
    features.col(static_cast<Eigen::Index>(k)) = model.V.col(j);
    targets(static_cast<Eigen::Index>(k)) = ratings[k].value;
  }
  return solve_ridge(features, targets, model.lambda);
}

void save_model(const FactorModel& model, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kModelHeader << '\n';
  out << "rank," << model.rank() << '\n';
  out << "lambda," << csv::format_double(model.lambda) << '\n';
  out << "n_users," << model.n_users() << '\n';
  out << "n_items," << model.n_items() << '\n';
  const auto dump = [&](char tag, const Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << tag << ',' << c;
      for (Eigen::Index r = 0; r < m.rows(); ++r) out << ',' << csv::format_double(m(r, c));
      out << '\n';
    }
  };
  dump('U', model.U);
  dump('V', model.V);
  csv::write_file(path, out.str());
}

FactorModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw StateError("model checkpoint not found: " + path.string());
  }
  const auto text = csv::read_file(path);
  const auto source = path.string();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  const auto next = [&]() -> std::string {
    if (!std::getline(in, line)) throw ParseError(source, line_no + 1, "unexpected end of file");
    ++line_no;
    return line;
  };
  if (csv::trim(next()) != kModelHeader) {
    throw ParseError(source, line_no, "not an ivd factor model checkpoint (bad version header)");
  }
  const auto scalar = [&](std::string_view key) {
    const auto text_line = next();
    const auto fields = csv::split(csv::trim(text_line), ",");
    if (fields.size() != 2 || fields[0] != key) {
      throw ParseError(source, line_no, "expected '" + std::string(key) + ",<value>'");
    }
    try {
      return csv::parse_double(fields[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
  };
  FactorModel model;
  const auto rank = static_cast<Eigen::Index>(scalar("rank"));
  model.lambda = scalar("lambda");
  const auto n_users = static_cast<Eigen::Index>(scalar("n_users"));
  const auto n_items = static_cast<Eigen::Index>(scalar("n_items"));
  model.U.resize(rank, n_users);
  model.V.resize(rank, n_items);
  const auto read_block = [&](char tag, Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto text_line = next();
      const auto fields = csv::split(csv::trim(text_line), ",");
      if (fields.size() != static_cast<std::size_t>(rank + 2) || fields[0].size() != 1 ||
          fields[0][0] != tag) {
        throw ParseError(source, line_no, std::string("malformed ") + tag + " row");
      }
      try {
        if (csv::parse_int(fields[1]) != c) throw ParseError(source, line_no, "column out of order");
        for (Eigen::Index r = 0; r < rank; ++r) {
          m(r, c) = csv::parse_double(fields[static_cast<std::size_t>(r + 2)]);
        }
      } catch (const std::invalid_argument& e) {
        throw ParseError(source, line_no, e.what());
      }
    }
  };
  read_block('U', model.U);
  read_block('V', model.V);
  model.validate();
  return model;
}

}  // namespace ivd
