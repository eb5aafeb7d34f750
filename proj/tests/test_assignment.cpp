#include "rtrack/assignment.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

using rtrack::Assignment;
using rtrack::Matrix;

namespace {

void expect_well_formed(const Assignment& a, int rows, int cols) {
  std::vector<int> row_seen(rows, 0), col_seen(cols, 0);
  for (const auto& [r, c] : a.pairs) {
    ++row_seen[r];
    ++col_seen[c];
  }
  for (const int r : a.unmatched_rows) ++row_seen[r];
  for (const int c : a.unmatched_cols) ++col_seen[c];
  for (const int n : row_seen) EXPECT_EQ(n, 1);
  for (const int n : col_seen) EXPECT_EQ(n, 1);
}

Matrix random_matrix(std::mt19937_64& rng, int r, int c, bool integer) {
  std::uniform_real_distribution<double> real(0.0, 1.0);
  std::uniform_int_distribution<int> small(0, 9);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = integer ? small(rng) : real(rng);
  return m;
}

}  // namespace

TEST(Solve, OneByOne) {
  Matrix m(1, 1);
  m << 0.0;
  const auto a = rtrack::solve(m);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0], std::make_pair(0, 0));
}

TEST(Solve, TwoByTwoPicksDiagonal) {
  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  const auto a = rtrack::solve(m);
  ASSERT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.pairs[0], std::make_pair(0, 0));
  EXPECT_EQ(a.pairs[1], std::make_pair(1, 1));
  EXPECT_DOUBLE_EQ(a.total_cost(m), 2.0);
}

TEST(Solve, EmptyRowsLeaveAllColumnsUnmatched) {
  const Matrix m(0, 3);
  const auto a = rtrack::solve(m);
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.unmatched_cols, (std::vector<int>{0, 1, 2}));
  EXPECT_TRUE(a.unmatched_rows.empty());
}

TEST(Solve, NonFiniteEntryIsInvalidCost) {
  Matrix m(2, 2);
  m << 0, std::numeric_limits<double>::quiet_NaN(), 1, 1;
  try {
    rtrack::solve(m);
    FAIL() << "expected InvalidCost";
  } catch (const rtrack::Error& e) {
    EXPECT_EQ(e.code(), rtrack::ErrorCode::InvalidCost);
  }
  m(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(rtrack::solve(m), rtrack::Error);
}

TEST(Solve, RectangularBothOrientations) {
  Matrix wide(2, 4);
  wide << 5, 1, 9, 9,  //
      1, 5, 9, 0;
  auto a = rtrack::solve(wide);
  EXPECT_DOUBLE_EQ(a.total_cost(wide), 1.0);
  expect_well_formed(a, 2, 4);
  EXPECT_EQ(a.unmatched_cols, (std::vector<int>{0, 2}));

  const Matrix tall = wide.transpose();
  a = rtrack::solve(tall);
  EXPECT_DOUBLE_EQ(a.total_cost(tall), 1.0);
  expect_well_formed(a, 4, 2);
}

TEST(Solve, DeterministicAcrossRuns) {
  Matrix ties = Matrix::Zero(4, 4);
  const auto a = rtrack::solve(ties);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(rtrack::solve(ties).pairs, a.pairs);
}

TEST(SolveProperties, MatchesBruteForceOnRandomMatrices) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(0, 7);
  for (int trial = 0; trial < 300; ++trial) {
    const int r = dim(rng), c = dim(rng);
    const Matrix m = random_matrix(rng, r, c, trial % 2 == 0);
    const auto a = rtrack::solve(m);
    expect_well_formed(a, r, c);
    EXPECT_EQ(static_cast<int>(a.pairs.size()), std::min(r, c));
    EXPECT_EQ(a.total_cost(m), rtrack::oracle::brute_force_min_cost(m)) << "trial " << trial;
  }
}

TEST(SolveProperties, RecoversPermutationStructure) {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 9; ++n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix m = Matrix::Ones(n, n);
    for (int i = 0; i < n; ++i) m(i, perm[i]) = 0.0;
    const auto a = rtrack::solve(m);
    ASSERT_EQ(static_cast<int>(a.pairs.size()), n);
    for (const auto& [r, c] : a.pairs) EXPECT_EQ(c, perm[r]);
  }
}

TEST(Gate, ZeroThresholdIsIdentity) {
  Matrix iou(2, 2);
  iou << 0.0, 0.4, 0.7, 0.1;
  const auto a = rtrack::solve(rtrack::iou_cost(iou));
  const auto g = rtrack::gate(a, iou, 0.0);
  EXPECT_EQ(g.pairs, a.pairs);
  EXPECT_EQ(g.unmatched_rows, a.unmatched_rows);
  EXPECT_EQ(g.unmatched_cols, a.unmatched_cols);
}

TEST(Gate, BelowThresholdPairMovesToUnmatched) {
  Matrix iou(1, 1);
  iou << 0.3;
  Assignment a;
  a.pairs = {{0, 0}};
  const auto g = rtrack::gate(a, iou, 0.5);
  EXPECT_TRUE(g.pairs.empty());
  EXPECT_EQ(g.unmatched_rows, std::vector<int>{0});
  EXPECT_EQ(g.unmatched_cols, std::vector<int>{0});
}

TEST(Gate, KeepsOnlyPairsAtOrAboveThreshold) {
  Matrix iou(2, 2);
  iou << 0.8, 0.0, 0.0, 0.2;
  Assignment a;
  a.pairs = {{0, 0}, {1, 1}};
  const auto g = rtrack::gate(a, iou, 0.5);
  ASSERT_EQ(g.pairs.size(), 1u);
  EXPECT_EQ(g.pairs[0], std::make_pair(0, 0));
  EXPECT_EQ(g.unmatched_rows, std::vector<int>{1});
  EXPECT_EQ(g.unmatched_cols, std::vector<int>{1});
  expect_well_formed(g, 2, 2);
}

TEST(GateProperties, Idempotent) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(0, 6);
  std::uniform_real_distribution<double> tau(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = dim(rng), c = dim(rng);
    const Matrix iou = random_matrix(rng, r, c, false);
    const double t = tau(rng);
    const auto once = rtrack::gate(rtrack::solve(rtrack::iou_cost(iou)), iou, t);
    const auto twice = rtrack::gate(once, iou, t);
    EXPECT_EQ(once.pairs, twice.pairs);
    EXPECT_EQ(once.unmatched_rows, twice.unmatched_rows);
    EXPECT_EQ(once.unmatched_cols, twice.unmatched_cols);
    expect_well_formed(once, r, c);
  }
}

TEST(SolveGated, SubGatePairDoesNotDisplaceValidPair) {
  // Plain max-IoU matching takes the two 0.45 pairs (0.9 total) and the gate
  // then discards both; the gated optimum keeps the single 0.6 pair.
  Matrix iou(2, 2);
  iou << 0.6, 0.45, 0.45, 0.0;
  const auto plain = rtrack::gate(rtrack::solve(rtrack::iou_cost(iou)), iou, 0.5);
  EXPECT_TRUE(plain.pairs.empty());
  const auto gated = rtrack::solve_gated(iou, 0.5);
  ASSERT_EQ(gated.pairs.size(), 1u);
  EXPECT_EQ(gated.pairs[0], std::make_pair(0, 0));
}
