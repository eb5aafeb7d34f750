#include "rtrack/geometry.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using rtrack::BBox;
using rtrack::ImageDims;

TEST(Iou, IdenticalBoxesScoreOne) { EXPECT_DOUBLE_EQ(rtrack::iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0); }

TEST(Iou, DisjointBoxesScoreZero) { EXPECT_EQ(rtrack::iou({0, 0, 10, 10}, {20, 20, 30, 30}), 0.0); }

TEST(Iou, HalfOverlapIsOneThird) {
  // intersection 5x10 = 50, union 100 + 100 - 50 = 150
  EXPECT_NEAR(rtrack::iou({0, 0, 10, 10}, {5, 0, 15, 10}), 50.0 / 150.0, 1e-15);
}

TEST(Iou, DegenerateBoxesScoreZero) {
  EXPECT_EQ(rtrack::iou({5, 5, 5, 5}, {5, 5, 5, 5}), 0.0);
  EXPECT_EQ(rtrack::iou({0, 0, 0, 10}, {0, 0, 10, 10}), 0.0);
}

TEST(Iou, TouchingEdgesScoreZero) { EXPECT_EQ(rtrack::iou({0, 0, 10, 10}, {10, 0, 20, 10}), 0.0); }

TEST(IouMatrix, EmptyRowsGiveZeroByN) {
  const std::vector<BBox> none;
  const std::vector<BBox> cols{{0, 0, 1, 1}, {0, 0, 2, 2}, {1, 1, 2, 2}};
  const auto m = rtrack::iou_matrix(none, cols);
  EXPECT_EQ(m.rows(), 0);
  EXPECT_EQ(m.cols(), 3);
}

TEST(IouMatrix, SingleIdenticalPair) {
  const std::vector<BBox> a{{0, 0, 10, 10}};
  const auto m = rtrack::iou_matrix(a, a);
  ASSERT_EQ(m.rows(), 1);
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
}

TEST(IouMatrix, AssembledElementWise) {
  const std::vector<BBox> rows{{0, 0, 10, 10}, {20, 20, 30, 30}};
  const std::vector<BBox> cols{{0, 0, 10, 10}, {5, 0, 15, 10}};
  const auto m = rtrack::iou_matrix(rows, cols);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 2);
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
  EXPECT_NEAR(m(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m(1, 0), 0.0);
  EXPECT_EQ(m(1, 1), 0.0);
}

TEST(Rescale, IdentityDimsLeaveBoxUnchanged) {
  const BBox b{1.5, 2.5, 30, 40};
  EXPECT_EQ(rtrack::rescale(b, {100, 100}, {100, 100}), b);
}

TEST(Rescale, ScalesEachAxisByItsRatio) {
  EXPECT_EQ(rtrack::rescale({0, 0, 10, 10}, {100, 100}, {200, 100}), (BBox{0, 0, 20, 10}));
  EXPECT_EQ(rtrack::rescale({10, 10, 20, 20}, {100, 200}, {50, 100}), (BBox{5, 5, 10, 10}));
}

TEST(ClampToImage, InBoundsUnchanged) {
  const BBox b{10, 10, 50, 60};
  EXPECT_EQ(rtrack::clamp_to_image(b, {100, 100}), b);
}

TEST(ClampToImage, ClampsAtZeroAndExtent) {
  EXPECT_EQ(rtrack::clamp_to_image({-5, -5, 10, 10}, {100, 100}), (BBox{0, 0, 10, 10}));
  EXPECT_EQ(rtrack::clamp_to_image({90, 90, 120, 130}, {100, 100}), (BBox{90, 90, 100, 100}));
}

TEST(ClampToImage, FullyOutsideCollapsesToValidZeroArea) {
  const BBox c = rtrack::clamp_to_image({150, 150, 200, 200}, {100, 100});
  EXPECT_TRUE(c.valid());
  EXPECT_FALSE(c.has_area());
}

TEST(GeometryProperties, IouSymmetricBoundedAndSelfOne) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5000; ++i) {
    const BBox a = rtrack::testing::random_box(rng, 100, true);
    const BBox b = rtrack::testing::random_box(rng, 100, true);
    const double ab = rtrack::iou(a, b);
    EXPECT_EQ(ab, rtrack::iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    if (a.has_area()) {
      EXPECT_DOUBLE_EQ(rtrack::iou(a, a), 1.0);
    }
  }
}

TEST(GeometryProperties, RescaleRoundTripAndScaleInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 4000);
  for (int i = 0; i < 5000; ++i) {
    const ImageDims d1{dim(rng), dim(rng)}, d2{dim(rng), dim(rng)};
    const BBox a = rtrack::testing::random_box(rng, 1000);
    const BBox b = rtrack::testing::random_box(rng, 1000);
    const BBox back = rtrack::rescale(rtrack::rescale(a, d1, d2), d2, d1);
    EXPECT_NEAR(back.x1, a.x1, 1e-9);
    EXPECT_NEAR(back.y1, a.y1, 1e-9);
    EXPECT_NEAR(back.x2, a.x2, 1e-9);
    EXPECT_NEAR(back.y2, a.y2, 1e-9);
    // Uniform scaling keeps IoU; per-axis scaling multiplies every area by the
    // same factor, so the ratio is preserved either way.
    EXPECT_NEAR(rtrack::iou(rtrack::rescale(a, d1, d2), rtrack::rescale(b, d1, d2)),
                rtrack::iou(a, b), 1e-9);
  }
}
