#include <random>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "ivd/item_state.hpp"

namespace ivd {
namespace {

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

struct Gen {
  std::mt19937_64 rng;
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> star{1, 5};

  explicit Gen(std::uint64_t seed) : rng(seed) {}
  Eigen::MatrixXd factors(int d, int m) {
    return Eigen::MatrixXd::NullaryExpr(d, m, [&] { return n01(rng); });
  }
  Eigen::VectorXd stars(int m) {
    return Eigen::VectorXd::NullaryExpr(m, [&] { return static_cast<double>(star(rng)); });
  }
};

TEST(ItemState, EmptyState) {
  const auto s = ItemVectorState::empty(3, 4, 0.1);
  EXPECT_EQ(s.a_inv, Eigen::MatrixXd::Identity(4, 4) * 10.0);
  EXPECT_EQ(s.v, Eigen::VectorXd::Zero(4));
  EXPECT_EQ(s.rater_count, 0);
}

TEST(ItemState, SingleRater) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 0;
  Eigen::VectorXd y(1);
  y << 4;
  const auto s = build_item_state(0, x, y, 0.1);
  EXPECT_NEAR(s.v(0), 3.6364, 1e-4);
  EXPECT_NEAR(s.v(1), 0.0, 1e-4);
  EXPECT_EQ(s.rater_count, 1);
}

TEST(ItemState, InverseIsSymmetric) {
  Gen g(1);
  const auto s = build_item_state(0, g.factors(6, 15), g.stars(15), 0.1);
  EXPECT_LT((s.a_inv - s.a_inv.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  const auto u = woodbury_update(s, g.factors(6, 5), g.stars(5));
  EXPECT_LT((u.next.a_inv - u.next.a_inv.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Woodbury, ConsistentRatingsLeaveVectorUnchanged) {
  Gen g(2);
  const auto s = build_item_state(0, g.factors(5, 12), g.stars(12), 0.1);
  const Eigen::MatrixXd x = g.factors(5, 7);
  const Eigen::VectorXd y = x.transpose() * s.v;
  const auto u = woodbury_update(s, x, y);
  EXPECT_EQ(u.v_hat, s.v);
}

TEST(Woodbury, RankOneMatchesShermanMorrison) {
  Gen g(3);
  const auto s = build_item_state(0, g.factors(6, 9), g.stars(9), 0.2);
  const Eigen::MatrixXd x = g.factors(6, 1);
  Eigen::VectorXd y(1);
  y << 5;
  const auto w = woodbury_update(s, x, y);
  const auto sm = sherman_morrison_update(s, x.col(0), 5.0);
  EXPECT_LT(rel_err(w.v_hat, sm.v_hat), 1e-12);
  EXPECT_LT((w.next.a_inv - sm.next.a_inv).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Woodbury, BlockMatchesBatchSolve) {
  Gen g(4);
  const Eigen::MatrixXd old_x = g.factors(8, 30);
  const Eigen::VectorXd old_y = g.stars(30);
  const Eigen::MatrixXd x = g.factors(8, 12);
  const Eigen::VectorXd y = g.stars(12);
  const auto u = woodbury_update(build_item_state(0, old_x, old_y, 0.1), x, y);

  Eigen::MatrixXd all_x(8, 42);
  all_x << old_x, x;
  Eigen::VectorXd all_y(42);
  all_y << old_y, y;
  EXPECT_LT(rel_err(u.v_hat, solve_item_vector(all_x, all_y, 0.1)), 1e-8);
  EXPECT_EQ(u.next.rater_count, 42);
}

// Property: folding any chain of blocks equals one batch solve, and the
// inverse stays positive definite throughout.
TEST(Woodbury, ChainedBlocksMatchBatchProperty) {
  Gen g(5);
  std::uniform_int_distribution<int> pick_d(1, 32), pick_m(1, 20), pick_chain(1, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = pick_d(g.rng);
    auto state = ItemVectorState::empty(0, d, 0.1);
    Eigen::MatrixXd all_x(d, 0);
    Eigen::VectorXd all_y(0);
    const int chain = pick_chain(g.rng);
    for (int b = 0; b < chain; ++b) {
      const int m = pick_m(g.rng);
      const Eigen::MatrixXd x = g.factors(d, m);
      const Eigen::VectorXd y = g.stars(m);
      auto u = woodbury_update(state, x, y);
      state = std::move(u.next);
      all_x.conservativeResize(d, all_x.cols() + m);
      all_x.rightCols(m) = x;
      all_y.conservativeResize(all_y.size() + m);
      all_y.tail(m) = y;
      Eigen::LLT<Eigen::MatrixXd> llt(state.a_inv);
      ASSERT_EQ(llt.info(), Eigen::Success) << "trial " << trial;
    }
    ASSERT_LT(rel_err(state.v, solve_item_vector(all_x, all_y, 0.1)), 1e-8) << "trial " << trial;
  }
}

TEST(Woodbury, InputStateIsUntouched) {
  Gen g(6);
  const auto s = build_item_state(0, g.factors(4, 6), g.stars(6), 0.1);
  const auto copy = s;
  woodbury_update(s, g.factors(4, 3), g.stars(3));
  EXPECT_EQ(s.a_inv, copy.a_inv);
  EXPECT_EQ(s.v, copy.v);
}

TEST(Woodbury, ShapeErrors) {
  const auto s = ItemVectorState::empty(0, 3, 0.1);
  EXPECT_THROW(woodbury_update(s, Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Ones(1)),
               ValidationError);
  EXPECT_THROW(woodbury_update(s, Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Ones(1)),
               ValidationError);
}

TEST(InverseUpdates, MatchDirectInverse) {
  Gen g(7);
  const Eigen::MatrixXd base = g.factors(5, 5) * g.factors(5, 5).transpose() +
                               5.0 * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd base_inv = base.inverse();
  const Eigen::VectorXd u = g.factors(5, 1);
  const Eigen::VectorXd w = g.factors(5, 1);
  const Eigen::MatrixXd sm = sherman_morrison_inverse(base_inv, u, w);
  EXPECT_LT((sm - (base + u * w.transpose()).inverse()).norm(), 1e-9);
  const Eigen::MatrixXd uu = g.factors(5, 2);
  const Eigen::MatrixXd ww = g.factors(5, 2);
  const Eigen::MatrixXd wb = woodbury_inverse(base_inv, uu, ww);
  EXPECT_LT((wb - (base + uu * ww.transpose()).inverse()).norm(), 1e-9);
}

TEST(RatingBlock, Validation) {
  RatingBlock b;
  b.X = Eigen::MatrixXd::Ones(2, 2);
  b.y = Eigen::VectorXd::Constant(2, 3.0);
  b.users = {0, 1};
  EXPECT_NO_THROW(b.validate(2, 1.0, 5.0));
  EXPECT_THROW(b.validate(3, 1.0, 5.0), ValidationError);
  b.y(1) = 6.0;
  EXPECT_THROW(b.validate(2, 1.0, 5.0), ValidationError);
  RatingBlock empty;
  empty.X = Eigen::MatrixXd(2, 0);
  EXPECT_THROW(empty.validate(2, 1.0, 5.0), ValidationError);
}

TEST(ItemState, FromModelUsesEveryRater) {
  FactorModel m;
  m.lambda = 0.3;
  m.U.resize(2, 3);
  m.U << 1, 0, 2, 0, 1, 1;
  m.V = Eigen::MatrixXd::Zero(2, 2);
  const RatingsMatrix r(3, 2, {{0, 1, 4}, {2, 1, 2}, {1, 0, 5}});
  const auto s = build_item_state(m, r, 1);
  Eigen::MatrixXd x(2, 2);
  x << 1, 2, 0, 1;
  Eigen::VectorXd y(2);
  y << 4, 2;
  EXPECT_LT(rel_err(s.v, solve_item_vector(x, y, 0.3)), 1e-12);
  EXPECT_EQ(s.rater_count, 2);
}

}  // namespace
}  // namespace ivd
