#pragma once
// Closed-form Koopman eigenpair catalogs for the systems that have them:
//   circle rotation by alpha:  (e^{2 pi i n alpha}, e^{2 pi i n x})
//   1-d linear contraction ax: (a^n, x^n)
// Every pair is re-verified pointwise at registration; doubling and logistic
// maps deliberately have no catalog and raise an explicit signal.

#include <string>
#include <vector>

#include "koop/observable.hpp"
#include "koop/rng.hpp"

namespace koop {

struct ExactEigenpair {
  Complex value;
  Observable fn;
  std::string label;
};

inline bool has_eigenpair_catalog(const DeterministicMap& map) {
  switch (map.kind()) {
    case MapKind::circle_rotation:
      return true;
    case MapKind::affine_contraction:
      if (map.dimension() != 1) return false;
      return map.offset()[0] == 0.0;
    default:
      return false;
  }
}

namespace detail {

// Pointwise identity check |f(Tx) - lambda f(x)| <= 1e-10 (1 + |f(x)|) over
// 1000 states drawn from the map's natural domain.
inline void verify_eigenpair(const DeterministicMap& map, const ExactEigenpair& pair) {
  const CounterRng rng(0x6B6F6F70ULL);
  const int checks = 1000;
  for (int i = 0; i < checks; ++i) {
    State x(1);
    if (map.kind() == MapKind::circle_rotation)
      x[0] = static_cast<double>(i) / checks;
    else
      x[0] = rng.normal(static_cast<std::uint64_t>(i));
    const Complex fx = pair.fn(x);
    const Complex fTx = pair.fn(map.apply(x));
    if (std::abs(fTx - pair.value * fx) > 1e-10 * (1.0 + std::abs(fx)))
      throw NumericalError("catalog: eigenpair '" + pair.label +
                           "' failed its registration identity at " + format_state(x));
  }
}

}  // namespace detail

// Rotation: orders 0, +1, -1, ..., +max_order, -max_order (matching the
// fourier dictionary layout). Contraction: degrees 0..max_order.
inline std::vector<ExactEigenpair> exact_eigenpairs(const DeterministicMap& map, int max_order) {
  if (max_order < 0) throw ValidationError("exact_eigenpairs: max_order must be >= 0");
  if (!has_eigenpair_catalog(map))
    throw NoCatalogError("no closed-form eigenpair catalog for " + map.describe());

  std::vector<ExactEigenpair> pairs;
  if (map.kind() == MapKind::circle_rotation) {
    const double alpha = map.rotation_angle();
    auto add = [&](int n) {
      const double arg = kTwoPi * n * alpha;
      pairs.push_back({Complex(std::cos(arg), std::sin(arg)), Observable::fourier_mode(n),
                       "fourier mode " + std::to_string(n)});
    };
    add(0);
    for (int n = 1; n <= max_order; ++n) {
      add(n);
      add(-n);
    }
  } else {
    const double a = map.scale()[0];
    double power = 1.0;
    for (int n = 0; n <= max_order; ++n) {
      pairs.push_back({Complex(power, 0.0), Observable::monomial(n),
                       "monomial degree " + std::to_string(n)});
      power *= a;
    }
  }
  for (const auto& p : pairs) detail::verify_eigenpair(map, p);
  return pairs;
}

// Look up a catalog member by its order (signed Fourier order for rotations,
// degree for contractions).
inline ExactEigenpair catalog_pair(const DeterministicMap& map, int order) {
  if (!has_eigenpair_catalog(map))
    throw NoCatalogError("no closed-form eigenpair catalog for " + map.describe());
  if (map.kind() == MapKind::circle_rotation) {
    const double arg = kTwoPi * order * map.rotation_angle();
    ExactEigenpair p{Complex(std::cos(arg), std::sin(arg)), Observable::fourier_mode(order),
                     "fourier mode " + std::to_string(order)};
    detail::verify_eigenpair(map, p);
    return p;
  }
  if (order < 0) throw ValidationError("catalog_pair: contraction degrees are >= 0");
  double power = 1.0;
  for (int n = 0; n < order; ++n) power *= map.scale()[0];
  ExactEigenpair p{Complex(power, 0.0), Observable::monomial(order),
                   "monomial degree " + std::to_string(order)};
  detail::verify_eigenpair(map, p);
  return p;
}

}  // namespace koop
