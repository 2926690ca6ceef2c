#pragma once

// Dense double-precision inner loops used by the tensor engine.
//
// Every routine exists as a portable scalar reference and, on x86-64, as an
// AVX2+FMA variant. The variant is picked once at startup from CPUID; the
// DOCGRAPH_SIMD environment variable ("scalar" or "avx2") overrides it.

#include <cstddef>
#include <string_view>

namespace docgraph::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;

  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
  // out = x + y, out = x * y (out may alias x or y)
  void (*add)(std::size_t n, const double* x, const double* y, double* out);
  void (*mul)(std::size_t n, const double* x, const double* y, double* out);
  // y += x * z
  void (*fma)(std::size_t n, const double* x, const double* z, double* y);

  // C[m x n] += A[m x k] * B[k x n]
  // A is addressed as A[i * a_row + p * a_col], so a transposed operand is a
  // stride swap. B and C are dense row-major.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a,
               std::size_t a_row, std::size_t a_col, const double* b, double* c);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool isa_supported(Isa isa);
const KernelTable& table_for(Isa isa);

/// The process-wide table. Resolved on first use.
const KernelTable& active();

/// Pin the active table (tests and benchmarks). Throws if unsupported.
void force_isa(Isa isa);

// Convenience wrappers on the active table for row-major operands.

/// C[m x n] += A[m x k] * B[k x n]
void matmul_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c);
/// C[m x n] += A[m x k] * B[n x k]^T
void matmul_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c);
/// C[m x n] += A[k x m]^T * B[k x n]
void matmul_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c);

}  // namespace docgraph::kernels
