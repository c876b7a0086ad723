#include <algorithm>
#include <cmath>

#include "prunemip/kernels.hpp"

namespace prunemip::kernels {
namespace {

double dotScalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

void axpyScalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void affineScalar(const double* w, const double* bias, const double* x, double* out,
                  std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double acc = dotScalar(w + i * cols, x, cols);
    out[i] = bias ? acc + bias[i] : acc;
  }
}

void intervalAffineScalar(const double* w, const double* bias, const double* lo,
                          const double* hi, double* out_lo, double* out_hi, std::size_t rows,
                          std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    double acc_lo = 0.0;
    double acc_hi = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      const double a = row[k] * lo[k];
      const double b = row[k] * hi[k];
      acc_lo += std::min(a, b);
      acc_hi += std::max(a, b);
    }
    const double b = bias ? bias[i] : 0.0;
    out_lo[i] = acc_lo + b;
    out_hi[i] = acc_hi + b;
  }
}

void absAffineScalar(const double* w, const double* x, double* out, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    double acc = 0.0;
    for (std::size_t k = 0; k < cols; ++k) acc += std::fabs(row[k]) * x[k];
    out[i] = acc;
  }
}

void reluScalar(double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x[k] = x[k] > 0.0 ? x[k] : 0.0;
}

}  // namespace

const KernelTable& scalarTable() {
  static const KernelTable table{
      "scalar",          dotScalar,       axpyScalar, affineScalar, intervalAffineScalar,
      absAffineScalar,   reluScalar,
  };
  return table;
}

}  // namespace prunemip::kernels
