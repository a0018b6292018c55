#include <cassert>
#include <cstddef>

#include "ruinwalk/kernels.hpp"

namespace ruinwalk::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const std::size_t n4 = n & ~std::size_t{3};
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < n4; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double sum = (s0 + s1) + (s2 + s3);
  for (std::size_t i = n4; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void correlate(std::span<const double> signal, std::span<const double> taps,
               std::span<double> out) {
  assert(taps.empty() || signal.size() + 1 >= out.size() + taps.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * signal[i + k];
    out[i] = acc;
  }
}

void convolve(std::span<const double> a, std::span<const double> b,
              std::span<double> out) {
  assert(a.empty() || b.empty() || out.size() == a.size() + b.size() - 1);
  for (double& x : out) x = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
  }
}

}  // namespace ruinwalk::kernels::scalar
