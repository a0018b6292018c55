#pragma once

// Data-parallel inner loops shared by the solver.
//
// Every kernel has a scalar reference implementation and, where the build and
// the CPU allow it, an AVX2 variant. The active backend is chosen once at
// first use: RUINWALK_KERNELS=scalar|avx2 forces a choice, otherwise the best
// supported backend wins. The variants evaluate the same floating-point
// operations in the same order (no FMA contraction), so their results are
// bitwise identical; tests/test_kernels.cpp holds them to that.

#include <span>
#include <string_view>

namespace ruinwalk::kernels {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);
bool backend_supported(Backend b);
Backend active_backend();
// Throws std::invalid_argument if the backend is not supported here.
void set_backend(Backend b);

// Sum of a[i]*b[i]. Accumulates in four interleaved partial sums
// (lane = i mod 4), combined as (s0+s1)+(s2+s3), then the tail in order.
double dot(std::span<const double> a, std::span<const double> b);

// out[i] = sum_k taps[k] * signal[i+k], k ascending.
// Requires signal.size() >= out.size() + taps.size() - 1.
void correlate(std::span<const double> signal, std::span<const double> taps,
               std::span<double> out);

// Polynomial product: out[i+j] = sum a[i]*b[j], i ascending.
// out.size() must be a.size() + b.size() - 1; out is overwritten.
void convolve(std::span<const double> a, std::span<const double> b,
              std::span<double> out);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
void correlate(std::span<const double> signal, std::span<const double> taps,
               std::span<double> out);
void convolve(std::span<const double> a, std::span<const double> b,
              std::span<double> out);
}  // namespace scalar

namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
void correlate(std::span<const double> signal, std::span<const double> taps,
               std::span<double> out);
void convolve(std::span<const double> a, std::span<const double> b,
              std::span<double> out);
}  // namespace avx2

}  // namespace ruinwalk::kernels
