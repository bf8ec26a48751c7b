#include <cstdlib>
#include <cstring>

#include "poolmatch/kernels.hpp"

namespace poolmatch::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, const double* x, const double* b, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = b[r] + dot_scalar(w + r * cols, x, cols);
}

const Table kScalar{dot_scalar, axpy_scalar, gemv_scalar};

struct Selection {
  Isa isa = Isa::scalar;
  const Table* table = &kScalar;

  Selection() {
    const char* force = std::getenv("POOLMATCH_SIMD");
    if (force && std::strcmp(force, "scalar") == 0) return;
    if (const Table* t = avx2_table()) {
      isa = Isa::avx2;
      table = t;
    }
  }
};

const Selection& selection() {
  static const Selection s;
  return s;
}

}  // namespace

const Table& scalar_table() { return kScalar; }

Isa active_isa() { return selection().isa; }
const Table& active() { return *selection().table; }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace poolmatch::kernels
