#pragma once
// Counter-based reproducible random numbers: output i is a pure function of
// (seed, i), so sample sets are bit-identical across runs and independent of
// evaluation order. The mixer is the splitmix64 finalizer.

#include <cmath>
#include <cstdint>

#include "koop/common.hpp"

namespace koop {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t raw(std::uint64_t counter) const {
    return detail::mix64(seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01(std::uint64_t counter) const {
    return static_cast<double>(raw(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_open(std::uint64_t counter) const {
    return static_cast<double>((raw(counter) >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draw i consumes counters 2i and 2i+1.
  double normal(std::uint64_t index) const {
    const double u1 = uniform_open(2 * index);
    const double u2 = uniform01(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t seed_;
};

// Inverse standard-normal CDF: Acklam's rational approximation refined with a
// Halley step on erfc. Accurate to ~1e-15 over (0,1); used for the equal-mass
// grid on Gaussian measures.
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("inverse_normal_cdf: p must lie in (0,1)");

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};

  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley refinement against the exact CDF.
  const double kSqrtHalf = 0.70710678118654752440;
  const double e = 0.5 * std::erfc(-x * kSqrtHalf) - p;
  const double u = e * std::sqrt(kTwoPi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace koop
