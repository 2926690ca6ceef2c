#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "docgraph/kernels/kernels.hpp"

namespace k = docgraph::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

std::vector<k::Isa> simd_variants() {
  std::vector<k::Isa> v;
  if (k::isa_supported(k::Isa::avx2)) v.push_back(k::Isa::avx2);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], tol * (1.0 + std::abs(b[i]))) << "at " << i;
  }
}

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(k::isa_supported(k::Isa::scalar));
  EXPECT_EQ(k::table_for(k::Isa::scalar).name, "scalar");
}

TEST(Kernels, VectorOpsMatchScalarReference) {
  std::mt19937_64 rng(7);
  const auto& ref = k::scalar_table();
  for (k::Isa isa : simd_variants()) {
    const auto& simd = k::table_for(isa);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 31u, 64u, 129u}) {
      const auto x = random_vec(n, rng), y = random_vec(n, rng), z = random_vec(n, rng);

      auto y_ref = y, y_simd = y;
      ref.axpy(n, 0.37, x.data(), y_ref.data());
      simd.axpy(n, 0.37, x.data(), y_simd.data());
      expect_close(y_simd, y_ref, 1e-14);

      EXPECT_NEAR(simd.dot(n, x.data(), y.data()), ref.dot(n, x.data(), y.data()), 1e-12);

      std::vector<double> o_ref(n), o_simd(n);
      ref.add(n, x.data(), y.data(), o_ref.data());
      simd.add(n, x.data(), y.data(), o_simd.data());
      EXPECT_EQ(o_ref, o_simd);
      ref.mul(n, x.data(), y.data(), o_ref.data());
      simd.mul(n, x.data(), y.data(), o_simd.data());
      EXPECT_EQ(o_ref, o_simd);

      auto f_ref = z, f_simd = z;
      ref.fma(n, x.data(), y.data(), f_ref.data());
      simd.fma(n, x.data(), y.data(), f_simd.data());
      expect_close(f_simd, f_ref, 1e-14);
    }
  }
}

TEST(Kernels, GemmMatchesScalarForAllLayouts) {
  std::mt19937_64 rng(11);
  const auto& ref = k::scalar_table();
  for (k::Isa isa : simd_variants()) {
    const auto& simd = k::table_for(isa);
    for (std::size_t m : {1u, 3u, 4u, 5u, 13u}) {
      for (std::size_t n : {1u, 7u, 8u, 9u, 17u}) {
        for (std::size_t kk : {1u, 2u, 6u, 33u}) {
          const auto b = random_vec(kk * n, rng);
          const auto c0 = random_vec(m * n, rng);
          // row-major A and transposed A
          const auto a = random_vec(m * kk, rng);
          for (bool transposed : {false, true}) {
            const std::size_t a_row = transposed ? 1 : kk;
            const std::size_t a_col = transposed ? m : 1;
            auto c_ref = c0, c_simd = c0;
            ref.gemm(m, n, kk, a.data(), a_row, a_col, b.data(), c_ref.data());
            simd.gemm(m, n, kk, a.data(), a_row, a_col, b.data(), c_simd.data());
            expect_close(c_simd, c_ref, 1e-13);
          }
        }
      }
    }
  }
}

TEST(Kernels, MatmulWrappersAgreeWithNaiveProduct) {
  std::mt19937_64 rng(3);
  const std::size_t m = 5, n = 6, kk = 7;
  const auto a = random_vec(m * kk, rng);   // [m, k]
  const auto b = random_vec(kk * n, rng);   // [k, n]
  std::vector<double> expect(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < kk; ++p) expect[i * n + j] += a[i * kk + p] * b[p * n + j];

  std::vector<double> c(m * n, 0.0);
  k::matmul_nn(m, n, kk, a.data(), b.data(), c.data());
  expect_close(c, expect, 1e-13);

  // B given as [n, k]
  std::vector<double> bt(n * kk);
  for (std::size_t p = 0; p < kk; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * kk + p] = b[p * n + j];
  std::fill(c.begin(), c.end(), 0.0);
  k::matmul_nt(m, n, kk, a.data(), bt.data(), c.data());
  expect_close(c, expect, 1e-13);

  // A given as [k, m]
  std::vector<double> at(kk * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < kk; ++p) at[p * m + i] = a[i * kk + p];
  std::fill(c.begin(), c.end(), 0.0);
  k::matmul_tn(m, n, kk, at.data(), b.data(), c.data());
  expect_close(c, expect, 1e-13);
}

TEST(Kernels, ForceIsaSwitchesActiveTable) {
  const auto& before = k::active();
  k::force_isa(k::Isa::scalar);
  EXPECT_EQ(k::active().isa, k::Isa::scalar);
  k::force_isa(before.isa);
  EXPECT_EQ(k::active().isa, before.isa);
}
