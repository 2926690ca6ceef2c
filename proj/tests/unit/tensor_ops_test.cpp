#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "docgraph/nn/ops.hpp"
#include "docgraph/nn/params.hpp"

using namespace docgraph::nn;

TEST(Tensor, ShapeAndDataLengthMustAgree) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), NumericError);
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(Tensor::scalar(4.0).rank(), 0u);
  EXPECT_DOUBLE_EQ(Tensor::scalar(4.0).item(), 4.0);
}

TEST(LeakyRelu, Branches) {
  Tape t;
  Var x = t.constant(Tensor::vector({2.0, -1.0}));
  Var y = leaky_relu(x, 0.01);
  EXPECT_DOUBLE_EQ(y.value()[0], 2.0);
  EXPECT_DOUBLE_EQ(y.value()[1], -0.01);
}

TEST(LeakyRelu, NegativeBranchGradientIsSlope) {
  Parameter p("x", Tensor::vector({-3.0}));
  Tape t;
  t.backward(sum(leaky_relu(t.param(p), 0.01)));
  EXPECT_DOUBLE_EQ(p.grad[0], 0.01);
}

TEST(LeakyRelu, RejectsSlopeOutsideUnitInterval) {
  Tape t;
  Var x = t.constant(Tensor::vector({1.0}));
  EXPECT_THROW(leaky_relu(x, 0.0), std::invalid_argument);
  EXPECT_THROW(leaky_relu(x, 1.0), std::invalid_argument);
}

TEST(MaskedSoftmax, UniformForEqualLogits) {
  Tape t;
  Var y = softmax(t.constant(Tensor::vector({0.0, 0.0, 0.0})));
  for (double v : y.value().data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(MaskedSoftmax, SingleElementIsOne) {
  Tape t;
  Var y = softmax(t.constant(Tensor::vector({5.0})));
  EXPECT_DOUBLE_EQ(y.value()[0], 1.0);
}

TEST(MaskedSoftmax, LogTwoAgainstZero) {
  Tape t;
  Var y = softmax(t.constant(Tensor::vector({std::log(2.0), 0.0})));
  EXPECT_NEAR(y.value()[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(y.value()[1], 1.0 / 3.0, 1e-15);
}

TEST(MaskedSoftmax, MaskedPositionsAreExactlyZero) {
  Tape t;
  const bool mask[] = {true, false, true};
  Var y = masked_softmax(t.constant(Tensor::vector({1.0, 50.0, 1.0})), mask);
  EXPECT_EQ(y.value()[1], 0.0);
  EXPECT_NEAR(y.value()[0], 0.5, 1e-15);
}

TEST(MaskedSoftmax, AllMaskedIsAnError) {
  Tape t;
  const bool mask[] = {false, false};
  EXPECT_THROW(masked_softmax(t.constant(Tensor::vector({1.0, 2.0})), mask), NumericError);
}

TEST(MaskedSoftmax, RowsSumToOneForLargeLogits) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    Var y = softmax(t.constant(uniform_tensor(Shape{4, 9}, 100.0, rng)));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 9; ++c) s += y.value().at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Logsumexp, MatchesDirectFormulaPerRow) {
  Tape t;
  Var y = logsumexp(t.constant(Tensor::matrix(2, 2, {1.0, 0.0, 700.0, 700.0})));
  ASSERT_EQ(y.shape(), (Shape{2}));
  EXPECT_NEAR(y.value()[0], std::log(std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(y.value()[1], 700.0 + std::log(2.0), 1e-12);
}

TEST(Broadcast, RowVectorAndScalar) {
  Tape t;
  Var a = t.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var row = t.constant(Tensor::vector({10, 20, 30}));
  Var s = t.constant(Tensor::scalar(2.0));
  EXPECT_EQ(add(a, row).value().storage(), (std::vector<double>{11, 22, 33, 14, 25, 36}));
  EXPECT_EQ(mul(s, a).value().storage(), (std::vector<double>{2, 4, 6, 8, 10, 12}));
}

TEST(Broadcast, ColumnAgainstMatrixUsesGeneralPath) {
  Tape t;
  Var a = t.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var col = t.constant(Tensor::matrix(2, 1, {1, -1}));
  EXPECT_EQ(mul(a, col).value().storage(), (std::vector<double>{1, 2, 3, -4, -5, -6}));
  Var row3 = t.constant(Tensor(Shape{1, 3}, std::vector<double>{1, 2, 3}));
  Var outer = add(col, row3);
  EXPECT_EQ(outer.shape(), (Shape{2, 3}));
  EXPECT_EQ(outer.value().storage(), (std::vector<double>{2, 3, 4, 0, 1, 2}));
}

TEST(Broadcast, IncompatibleShapesThrow) {
  Tape t;
  Var a = t.constant(Tensor(Shape{2, 3}));
  Var b = t.constant(Tensor(Shape{2, 2}));
  EXPECT_THROW(add(a, b), NumericError);
}

TEST(Structural, ConcatSliceGatherReshape) {
  Tape t;
  Var a = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var b = t.constant(Tensor::matrix(2, 1, {9, 8}));
  Var c = concat({a, b}, 1);
  EXPECT_EQ(c.value().storage(), (std::vector<double>{1, 2, 9, 3, 4, 8}));
  Var r = concat({a, a}, 0);
  EXPECT_EQ(r.shape(), (Shape{4, 2}));
  EXPECT_EQ(slice(c, 1, 1, 3).value().storage(), (std::vector<double>{2, 9, 4, 8}));
  const std::size_t idx[] = {1, 1, 0};
  EXPECT_EQ(gather_rows(a, idx).value().storage(), (std::vector<double>{3, 4, 3, 4, 1, 2}));
  EXPECT_EQ(transpose(a).value().storage(), (std::vector<double>{1, 3, 2, 4}));
  EXPECT_EQ(reshape(a, Shape{4}).shape(), (Shape{4}));
  EXPECT_EQ(sum_axis(reshape(c, Shape{2, 3}), 0).value().storage(), (std::vector<double>{4, 6, 17}));
  EXPECT_DOUBLE_EQ(sum(a).value().item(), 10.0);
  EXPECT_DOUBLE_EQ(mean(a).value().item(), 2.5);
}

TEST(Structural, GatherOutOfRangeThrows) {
  Tape t;
  Var a = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  const std::size_t idx[] = {2};
  EXPECT_THROW(gather_rows(a, idx), NumericError);
}

TEST(Finiteness, OverflowIsAnError) {
  Tape t;
  Var x = t.constant(Tensor::vector({1000.0}));
  EXPECT_THROW(exp(x), NumericError);
}

TEST(Finiteness, NonFiniteInputRejected) {
  Tape t;
  EXPECT_THROW(t.constant(Tensor::vector({std::nan("")})), NumericError);
}
