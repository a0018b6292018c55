#include <immintrin.h>

#include <cassert>
#include <cstddef>

#include "ruinwalk/kernels.hpp"

namespace ruinwalk::kernels::avx2 {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const std::size_t n4 = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a.data() + i),
                                       _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, prod);
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = n4; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

// Vectorised over output positions; each lane runs the scalar k-loop.
void correlate(std::span<const double> signal, std::span<const double> taps,
               std::span<double> out) {
  assert(taps.empty() || signal.size() + 1 >= out.size() + taps.size());
  const std::size_t n = out.size();
  const std::size_t n4 = n & ~std::size_t{3};
  const double* sig = signal.data();
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const __m256d t = _mm256_set1_pd(taps[k]);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(t, _mm256_loadu_pd(sig + i + k)));
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (std::size_t i = n4; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * sig[i + k];
    out[i] = acc;
  }
}

void convolve(std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
  assert(a.empty() || b.empty() || out.size() == a.size() + b.size() - 1);
  for (double& x : out) x = 0.0;
  const std::size_t nb = b.size();
  const std::size_t nb4 = nb & ~std::size_t{3};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    const __m256d va = _mm256_set1_pd(ai);
    double* dst = out.data() + i;
    std::size_t j = 0;
    for (; j < nb4; j += 4) {
      const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(b.data() + j));
      _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_loadu_pd(dst + j), prod));
    }
    for (; j < nb; ++j) dst[j] += ai * b[j];
  }
}

}  // namespace ruinwalk::kernels::avx2
