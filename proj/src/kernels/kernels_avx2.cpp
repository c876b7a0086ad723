// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>

#include "prunemip/kernels.hpp"

namespace prunemip::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dotAvx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

void axpyAvx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
    _mm256_storeu_pd(y + k, vy);
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

void affineAvx2(const double* w, const double* bias, const double* x, double* out,
                std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double acc = dotAvx2(w + i * cols, x, cols);
    out[i] = bias ? acc + bias[i] : acc;
  }
}

void intervalAffineAvx2(const double* w, const double* bias, const double* lo, const double* hi,
                        double* out_lo, double* out_hi, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    __m256d acc_lo = _mm256_setzero_pd();
    __m256d acc_hi = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= cols; k += 4) {
      const __m256d vw = _mm256_loadu_pd(row + k);
      const __m256d a = _mm256_mul_pd(vw, _mm256_loadu_pd(lo + k));
      const __m256d b = _mm256_mul_pd(vw, _mm256_loadu_pd(hi + k));
      acc_lo = _mm256_add_pd(acc_lo, _mm256_min_pd(a, b));
      acc_hi = _mm256_add_pd(acc_hi, _mm256_max_pd(a, b));
    }
    double s_lo = hsum(acc_lo);
    double s_hi = hsum(acc_hi);
    for (; k < cols; ++k) {
      const double a = row[k] * lo[k];
      const double b = row[k] * hi[k];
      s_lo += a < b ? a : b;
      s_hi += a < b ? b : a;
    }
    const double bi = bias ? bias[i] : 0.0;
    out_lo[i] = s_lo + bi;
    out_hi[i] = s_hi + bi;
  }
}

void absAffineAvx2(const double* w, const double* x, double* out, std::size_t rows,
                   std::size_t cols) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= cols; k += 4) {
      const __m256d vw = _mm256_andnot_pd(sign, _mm256_loadu_pd(row + k));
      acc = _mm256_fmadd_pd(vw, _mm256_loadu_pd(x + k), acc);
    }
    double s = hsum(acc);
    for (; k < cols; ++k) s += std::fabs(row[k]) * x[k];
    out[i] = s;
  }
}

void reluAvx2(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    // max_pd returns the second operand when either is NaN, matching the
    // scalar "x > 0 ? x : 0".
    _mm256_storeu_pd(x + k, _mm256_max_pd(_mm256_loadu_pd(x + k), zero));
  }
  for (; k < n; ++k) x[k] = x[k] > 0.0 ? x[k] : 0.0;
}

}  // namespace

const KernelTable& avx2TableImpl() {
  static const KernelTable table{
      "avx2", dotAvx2, axpyAvx2, affineAvx2, intervalAffineAvx2, absAffineAvx2, reluAvx2,
  };
  return table;
}

}  // namespace prunemip::kernels
