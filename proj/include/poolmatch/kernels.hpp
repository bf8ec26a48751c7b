#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels behind the value network. Each routine has a
// scalar reference and, on x86-64, an AVX2+FMA variant; the variant is picked
// once at startup from CPUID unless POOLMATCH_SIMD=scalar is set.
namespace poolmatch::kernels {

enum class Isa { scalar, avx2 };

struct Table {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + b, W row-major rows x cols
  void (*gemv)(const double* w, const double* x, const double* b, double* y, std::size_t rows, std::size_t cols);
};

const Table& scalar_table();
// nullptr when the build or CPU lacks AVX2/FMA.
const Table* avx2_table();

Isa active_isa();
const Table& active();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace poolmatch::kernels
