#include "ivd/item_state.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "ivd/csv.hpp"

namespace ivd {
namespace {

void symmetrize(Eigen::MatrixXd& m) {
  const Eigen::MatrixXd t = m.transpose();
  m = 0.5 * (m + t);
}

}  // namespace

std::string_view to_string(BlockLabel label) {
  return label == BlockLabel::attack ? "attack" : "genuine";
}

void RatingBlock::validate(int rank, double r_min, double r_max) const {
  if (y.size() < 1) throw ValidationError("rating block must hold at least one rating");
  if (X.rows() != rank) {
    throw ValidationError("rating block has " + std::to_string(X.rows()) +
                          "-dimensional raters, expected " + std::to_string(rank));
  }
  if (X.cols() != y.size()) throw ValidationError("rating block: X columns and y differ in count");
  if (!users.empty() && users.size() != static_cast<std::size_t>(y.size())) {
    throw ValidationError("rating block: user ids and y differ in count");
  }
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (!(y(k) >= r_min && y(k) <= r_max)) {
      throw ValidationError("rating block: rating " + csv::format_double(y(k)) + " off scale");
    }
  }
}

ItemVectorState ItemVectorState::empty(ItemId item, int rank, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("item state needs lambda > 0");
  ItemVectorState s;
  s.item = item;
  s.lambda = lambda;
  s.a_inv = Eigen::MatrixXd::Identity(rank, rank) / lambda;
  s.v = Eigen::VectorXd::Zero(rank);
  s.rater_count = 0;
  return s;
}

ItemVectorState build_item_state(ItemId item, const Eigen::Ref<const Eigen::MatrixXd>& raters,
                                 const Eigen::Ref<const Eigen::VectorXd>& ratings, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("item state needs lambda > 0");
  if (raters.cols() != ratings.size()) {
    throw ValidationError("item state: rater columns and ratings differ in count");
  }
  const auto d = raters.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d) * lambda;
  a.selfadjointView<Eigen::Lower>().rankUpdate(raters);
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError("item Gram matrix not positive definite");

  ItemVectorState s;
  s.item = item;
  s.lambda = lambda;
  s.a_inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
  symmetrize(s.a_inv);
  s.v = llt.solve(raters * ratings);
  s.rater_count = static_cast<int>(raters.cols());
  return s;
}

ItemVectorState build_item_state(const FactorModel& model, const RatingsMatrix& ratings,
                                 ItemId item) {
  if (item < 0 || item >= ratings.n_items()) throw ValidationError("unknown item id");
  const auto list = ratings.item_entries(item);
  Eigen::MatrixXd raters(model.rank(), static_cast<Eigen::Index>(list.size()));
  Eigen::VectorXd values(static_cast<Eigen::Index>(list.size()));
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto& e = ratings.entries()[list[k]];
    raters.col(static_cast<Eigen::Index>(k)) = model.U.col(e.user);
    values(static_cast<Eigen::Index>(k)) = e.value;
  }
  return build_item_state(item, raters, values, model.lambda);
}

ItemUpdate woodbury_update(const ItemVectorState& state, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (X.rows() != state.rank()) throw ValidationError("block rank does not match item state");
  if (X.cols() != y.size()) throw ValidationError("block X columns and y differ in count");
  const auto m = X.cols();

  const Eigen::MatrixXd a_inv_x = state.a_inv * X;  // d x m
  Eigen::MatrixXd capacitance = X.transpose() * a_inv_x;
  capacitance.diagonal().array() += 1.0;
  symmetrize(capacitance);
  Eigen::LLT<Eigen::MatrixXd> llt(capacitance);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("capacitance matrix I + X^T A^-1 X not positive definite");
  }
  // gain = A^-1 X (I + X^T A^-1 X)^-1, via the symmetric solve of its transpose.
  const Eigen::MatrixXd gain = llt.solve(a_inv_x.transpose()).transpose();
  const Eigen::VectorXd residual = y - X.transpose() * state.v;

  ItemUpdate out;
  out.v_hat = state.v + gain * residual;
  out.next = state;
  out.next.a_inv.noalias() -= gain * a_inv_x.transpose();
  symmetrize(out.next.a_inv);
  out.next.v = out.v_hat;
  out.next.rater_count = state.rater_count + static_cast<int>(m);
  if (!out.v_hat.allFinite() || !out.next.a_inv.allFinite()) {
    throw NumericalError("item vector update produced non-finite values");
  }
  return out;
}

ItemUpdate sherman_morrison_update(const ItemVectorState& state,
                                   const Eigen::Ref<const Eigen::VectorXd>& x, double y) {
  if (x.size() != state.rank()) throw ValidationError("rater rank does not match item state");
  const Eigen::VectorXd a_inv_x = state.a_inv * x;
  const double denom = 1.0 + x.dot(a_inv_x);
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw NumericalError("Sherman-Morrison denominator not positive");
  }
  ItemUpdate out;
  out.v_hat = state.v + a_inv_x * ((y - x.dot(state.v)) / denom);
  out.next = state;
  out.next.a_inv.noalias() -= (a_inv_x * a_inv_x.transpose()) / denom;
  symmetrize(out.next.a_inv);
  out.next.v = out.v_hat;
  out.next.rater_count = state.rater_count + 1;
  return out;
}

Eigen::MatrixXd sherman_morrison_inverse(const Eigen::Ref<const Eigen::MatrixXd>& m_inv,
                                         const Eigen::Ref<const Eigen::VectorXd>& u,
                                         const Eigen::Ref<const Eigen::VectorXd>& w) {
  const Eigen::VectorXd m_inv_u = m_inv * u;
  const Eigen::RowVectorXd w_m_inv = w.transpose() * m_inv;
  const double denom = 1.0 + w.dot(m_inv_u);
  if (denom == 0.0 || !std::isfinite(denom)) {
    throw NumericalError("Sherman-Morrison: perturbed matrix is singular");
  }
  return m_inv - (m_inv_u * w_m_inv) / denom;
}

Eigen::MatrixXd woodbury_inverse(const Eigen::Ref<const Eigen::MatrixXd>& m_inv,
                                 const Eigen::Ref<const Eigen::MatrixXd>& u,
                                 const Eigen::Ref<const Eigen::MatrixXd>& w) {
  if (u.rows() != m_inv.rows() || w.rows() != m_inv.rows() || u.cols() != w.cols()) {
    throw ValidationError("Woodbury: perturbation factors have wrong shape");
  }
  const Eigen::MatrixXd m_inv_u = m_inv * u;
  Eigen::MatrixXd capacitance = w.transpose() * m_inv_u;
  capacitance.diagonal().array() += 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(capacitance);
  if (!lu.isInvertible()) throw NumericalError("Woodbury: capacitance matrix is singular");
  return m_inv - m_inv_u * lu.solve(w.transpose() * m_inv);
}

}  // namespace ivd
