#pragma once
// Shared scalar types, the error taxonomy, and the fixed-order pairwise
// reduction used by every quadrature sum in the library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace koop {

using Complex = std::complex<double>;

// A point of the state space. Circle maps use a single coordinate in [0,1);
// finite-state systems store the state index in coordinate 0.
using State = std::vector<double>;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Error taxonomy; the CLI maps these onto its exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Bad configuration, violated type invariant, or failed precondition.
struct ValidationError : Error { using Error::Error; };
// A state fell outside a map's declared domain.
struct DomainError : Error { using Error::Error; };
// Zero norms, non-finite values, eigensolver failure.
struct NumericalError : Error { using Error::Error; };
// Requested a closed-form eigenpair catalog from a system that has none.
struct NoCatalogError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const Complex& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// Pairwise tree reduction with an association order that depends only on the
// element count. Quadrature results are therefore identical no matter how the
// evaluation was batched or parallelized.
template <class T>
T pairwise_sum(const T* data, std::size_t n) {
  if (n == 0) return T{};
  if (n <= 4) {
    T acc = data[0];
    for (std::size_t i = 1; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(v.data(), v.size());
}

// FNV-1a, used to fingerprint configuration files in reports.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string format_state(const State& x) {
  std::string out = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(x[i]);
  }
  out += ")";
  return out;
}

}  // namespace koop
