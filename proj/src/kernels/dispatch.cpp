#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "docgraph/kernels/kernels.hpp"

namespace docgraph::kernels {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable& resolve() {
  if (const char* env = std::getenv("DOCGRAPH_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return scalar_table();
    if (v == "avx2" && isa_supported(Isa::avx2)) return table_for(Isa::avx2);
  }
  if (isa_supported(Isa::avx2)) return table_for(Isa::avx2);
  return scalar_table();
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_supported(isa)) throw std::runtime_error("kernel ISA not supported on this CPU");
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::avx2) return avx2_table();
#endif
  return scalar_table();
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = &resolve();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void force_isa(Isa isa) { g_active.store(&table_for(isa), std::memory_order_release); }

void matmul_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c) {
  active().gemm(m, n, k, a, k, 1, b, c);
}

void matmul_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c) {
  active().gemm(m, n, k, a, 1, m, b, c);
}

void matmul_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c) {
  // B is [n x k]; repack as [k x n] so the row-major tile kernel applies.
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  active().gemm(m, n, k, a, k, 1, bt.data(), c);
}

}  // namespace docgraph::kernels
