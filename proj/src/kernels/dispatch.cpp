#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ruinwalk/kernels.hpp"

namespace ruinwalk::kernels {

namespace {

struct Table {
  double (*dot)(std::span<const double>, std::span<const double>);
  void (*correlate)(std::span<const double>, std::span<const double>, std::span<double>);
  void (*convolve)(std::span<const double>, std::span<const double>, std::span<double>);
};

constexpr Table kScalar{&scalar::dot, &scalar::correlate, &scalar::convolve};
#if defined(RUINWALK_BUILD_AVX2)
constexpr Table kAvx2{&avx2::dot, &avx2::correlate, &avx2::convolve};
#endif

bool cpu_has_avx2() {
#if defined(RUINWALK_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Table* table_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &kScalar;
    case Backend::avx2:
#if defined(RUINWALK_BUILD_AVX2)
      return &kAvx2;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Backend initial_backend() {
  if (const char* env = std::getenv("RUINWALK_KERNELS")) {
    const std::string choice(env);
    if (choice == "scalar") return Backend::scalar;
    if (choice == "avx2" && backend_supported(Backend::avx2)) return Backend::avx2;
  }
  return backend_supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

const Table& active() { return *table_for(current().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_supported(Backend b) {
  if (b == Backend::scalar) return true;
  return table_for(b) != nullptr && cpu_has_avx2();
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw std::invalid_argument("kernel backend not supported: " + std::string(backend_name(b)));
  current().store(b, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) { return active().dot(a, b); }

void correlate(std::span<const double> signal, std::span<const double> taps,
               std::span<double> out) {
  active().correlate(signal, taps, out);
}

void convolve(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().convolve(a, b, out);
}

}  // namespace ruinwalk::kernels
