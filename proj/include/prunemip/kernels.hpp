#pragma once

// Dense double-precision inner loops shared by the network, bounds, training
// and simplex code. Every kernel has a portable scalar reference; an AVX2/FMA
// variant is selected at runtime when the CPU supports it. The two variants
// may differ in summation order, so results agree to rounding, not bitwise.

#include <cstddef>
#include <span>
#include <string_view>

namespace prunemip::kernels {

struct KernelTable {
  const char* name;
  // sum_k a[k] * b[k]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = W x + bias, W row-major rows x cols; bias may be null
  void (*affine)(const double* w, const double* bias, const double* x, double* out,
                 std::size_t rows, std::size_t cols);
  // out_lo[i] = sum_k min(W_ik lo_k, W_ik hi_k) + bias_i, out_hi symmetric with max
  void (*interval_affine)(const double* w, const double* bias, const double* lo,
                          const double* hi, double* out_lo, double* out_hi,
                          std::size_t rows, std::size_t cols);
  // out = |W| x
  void (*abs_affine)(const double* w, const double* x, double* out, std::size_t rows,
                     std::size_t cols);
  void (*relu_inplace)(double* x, std::size_t n);
};

enum class Variant { Scalar, Avx2 };

const KernelTable& scalarTable();
// Null when the binary was built without AVX2 or the CPU lacks AVX2+FMA.
const KernelTable* avx2Table();

// The table used by the library. Defaults to the best supported variant;
// PRUNEMIP_KERNELS=scalar in the environment forces the reference path.
const KernelTable& active();
// Returns false if the requested variant is unavailable.
bool select(Variant variant);
std::string_view activeName();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void reluInPlace(std::span<double> x) { active().relu_inplace(x.data(), x.size()); }

}  // namespace prunemip::kernels
