#pragma once
// Shared generators for the property-style tests. Everything is driven by the
// library's own counter RNG so failures reproduce exactly.

#include <cstdint>
#include <vector>

#include "koop/measure.hpp"
#include "koop/rng.hpp"

namespace testgen {

struct Gen {
  koop::CounterRng rng;
  std::uint64_t counter = 0;

  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform() { return rng.uniform01(counter++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return rng.normal(counter++); }
  int integer(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * (hi - lo + 1)) % (hi - lo + 1);
  }
  koop::Complex complex_in_disk(double radius) {
    const double a = uniform(0.0, koop::kTwoPi);
    const double r = radius * std::sqrt(uniform());
    return {r * std::cos(a), r * std::sin(a)};
  }
};

// Random observable over the circle built from Fourier modes, constants, and
// the coordinate, closed under sums / products / scalar multiples.
inline koop::Observable random_circle_observable(Gen& g, int depth = 2) {
  using koop::Observable;
  if (depth <= 0) {
    switch (g.integer(0, 2)) {
      case 0: return Observable::fourier_mode(g.integer(-3, 3));
      case 1: return Observable::constant(g.complex_in_disk(2.0));
      default: return Observable::coordinate(0);
    }
  }
  switch (g.integer(0, 3)) {
    case 0: return random_circle_observable(g, depth - 1) + random_circle_observable(g, depth - 1);
    case 1: return random_circle_observable(g, depth - 1) * random_circle_observable(g, depth - 1);
    case 2: return g.complex_in_disk(2.0) * random_circle_observable(g, depth - 1);
    default: return random_circle_observable(g, 0);
  }
}

inline std::vector<koop::State> random_circle_states(Gen& g, std::size_t count) {
  std::vector<koop::State> states;
  for (std::size_t i = 0; i < count; ++i) states.push_back({g.uniform()});
  return states;
}

}  // namespace testgen
