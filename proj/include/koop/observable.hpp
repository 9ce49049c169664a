#pragma once
// The function algebra. Observables are immutable construction trees
// evaluated on demand, so composition with a map is exact rather than
// interpolated. Primitives: constants, coordinates, Fourier modes e^{2*pi*i*n*x},
// monomials x^n, and finite-state value vectors / indicators. The algebra is
// closed under sum, scalar multiple, pointwise product, composition with a
// DeterministicMap, and the clamp operator.
//
// The clamp forces values into the band [1/k, m] in absolute value:
//   * real-valued trees use the six-case rule (sign preserved, 0 -> +1/k);
//   * complex-valued trees use a phase-preserving modulus clamp by default,
//     with a component-wise variant (six-case on each of Re and Im) available
//     for comparison.

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "koop/dynamics.hpp"

namespace koop {

enum class ClampMode { modulus, componentwise };

// Band [1/k, m] in absolute value, with m > 0 and k >= 1. The degenerate band
// 1/k == m is admitted; it arises at the first step of the Weyl-sequence
// sweep (k = 1, m = k^3 = 1).
struct ClampParams {
  double m;
  double k;

  ClampParams(double outer, double inner_k) : m(outer), k(inner_k) {
    if (!is_finite(m) || !(m > 0.0)) throw ValidationError("clamp: m must be positive");
    if (!is_finite(k) || !(k >= 1.0)) throw ValidationError("clamp: k must be >= 1");
    if (!(1.0 / k <= m)) throw ValidationError("clamp: band [1/k, m] is empty");
  }

  double lower() const { return 1.0 / k; }
  double upper() const { return m; }

  friend bool operator==(const ClampParams& a, const ClampParams& b) {
    return a.m == b.m && a.k == b.k;
  }
};

namespace detail {

// Six-case truncation of a real value into [-m, -1/k] u [1/k, m].
// Zero falls in the "+1/k" branch.
inline double clamp_real(double v, double lo, double hi) {
  if (v >= hi) return hi;
  if (v > lo) return v;
  if (v >= 0.0) return lo;
  if (v >= -lo) return -lo;
  if (v > -hi) return v;
  return -hi;
}

// Phase-preserving modulus clamp. After the rescale, the measured modulus is
// settled into [lo, hi]: a coarse multiplicative correction while it is many
// ulps away (denormal inputs divide imprecisely), then one-ulp nudges of the
// dominant component until std::abs — the same measurement callers use —
// reports a value inside the band.
inline Complex clamp_modulus(Complex z, double lo, double hi) {
  const double r = std::abs(z);
  if (r == 0.0) return Complex(lo, 0.0);
  if (r >= lo && r <= hi) return z;
  const double target = (r < lo) ? lo : hi;
  double wr = z.real() / r * target;
  double wi = z.imag() / r * target;
  for (int iter = 0; iter < 64; ++iter) {
    const double rw = std::abs(Complex(wr, wi));
    if (rw >= lo && rw <= hi) break;
    const bool shrink = rw > hi;
    const double goal = shrink ? hi : lo;
    if (std::abs(rw - goal) > 8.0 * std::numeric_limits<double>::epsilon() * goal) {
      const double scale = goal / rw;
      wr *= scale;
      wi *= scale;
      continue;
    }
    const double inf = std::numeric_limits<double>::infinity();
    if (std::abs(wr) >= std::abs(wi)) {
      wr = std::nextafter(wr, shrink ? 0.0 : (wr < 0.0 ? -inf : inf));
    } else {
      wi = std::nextafter(wi, shrink ? 0.0 : (wi < 0.0 ? -inf : inf));
    }
  }
  return Complex(wr, wi);
}

struct ObsNode {
  enum class Kind {
    constant,
    coordinate,
    fourier,
    monomial,
    state_values,
    indicator,
    sum,
    scalar_multiple,
    product,
    composition,
    clamp,
  };

  Kind kind;
  Complex scalar{};             // constant value or scalar factor
  long index = 0;               // axis, Fourier order, degree, or state index
  std::size_t state_count = 0;  // bound for finite-state primitives
  std::vector<Complex> values;  // state_values payload
  std::shared_ptr<const DeterministicMap> map;  // composition
  std::optional<ClampParams> band;
  ClampMode mode = ClampMode::modulus;
  std::shared_ptr<const ObsNode> lhs, rhs;
  bool real_valued = false;

  Complex eval(const State& x) const {
    switch (kind) {
      case Kind::constant:
        return scalar;
      case Kind::coordinate:
        return Complex(axis_value(x), 0.0);
      case Kind::fourier: {
        const double arg = kTwoPi * static_cast<double>(index) * axis_value(x);
        return Complex(std::cos(arg), std::sin(arg));
      }
      case Kind::monomial: {
        double p = 1.0;
        const double v = axis_value(x);
        for (long i = 0; i < index; ++i) p *= v;
        return Complex(p, 0.0);
      }
      case Kind::state_values:
        return values[state_index(x)];
      case Kind::indicator:
        return state_index(x) == static_cast<std::size_t>(index) ? Complex(1.0, 0.0)
                                                                 : Complex(0.0, 0.0);
      case Kind::sum:
        return lhs->eval(x) + rhs->eval(x);
      case Kind::scalar_multiple:
        return scalar * lhs->eval(x);
      case Kind::product:
        return lhs->eval(x) * rhs->eval(x);
      case Kind::composition:
        return lhs->eval(map->apply(x));
      case Kind::clamp: {
        const Complex v = lhs->eval(x);
        const double lo = band->lower();
        const double hi = band->upper();
        if (lhs->real_valued) return Complex(clamp_real(v.real(), lo, hi), 0.0);
        if (mode == ClampMode::componentwise)
          return Complex(clamp_real(v.real(), lo, hi), clamp_real(v.imag(), lo, hi));
        return clamp_modulus(v, lo, hi);
      }
    }
    throw NumericalError("observable: unreachable node kind");
  }

 private:
  double axis_value(const State& x) const {
    // Fourier modes and monomials read coordinate 0; coordinate nodes carry
    // their axis in `index`.
    const std::size_t a = (kind == Kind::coordinate) ? static_cast<std::size_t>(index) : 0;
    if (a >= x.size())
      throw DomainError("observable: coordinate " + std::to_string(a) +
                        " out of range for state " + format_state(x));
    return x[a];
  }

  std::size_t state_index(const State& x) const {
    if (x.empty()) throw DomainError("observable: empty state for finite-state primitive");
    const double raw = x[0];
    const auto idx = static_cast<long long>(std::llround(raw));
    if (std::abs(raw - static_cast<double>(idx)) > 1e-9 || idx < 0 ||
        static_cast<std::size_t>(idx) >= state_count)
      throw DomainError("observable: state " + format_state(x) +
                        " is not a valid index below " + std::to_string(state_count));
    return static_cast<std::size_t>(idx);
  }
};

using NodePtr = std::shared_ptr<const ObsNode>;

inline bool same_node(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  if (a->scalar != b->scalar || a->index != b->index || a->state_count != b->state_count ||
      a->values != b->values)
    return false;
  if (static_cast<bool>(a->map) != static_cast<bool>(b->map)) return false;
  if (a->map && !(*a->map == *b->map)) return false;
  if (a->band.has_value() != b->band.has_value()) return false;
  if (a->band && !(*a->band == *b->band)) return false;
  if (a->band && a->mode != b->mode) return false;
  return same_node(a->lhs, b->lhs) && same_node(a->rhs, b->rhs);
}

}  // namespace detail

class Observable {
 public:
  // Defaults to the zero constant so records can hold observables by value.
  Observable() : Observable(constant(0.0)) {}

  Complex operator()(const State& x) const { return node_->eval(x); }
  bool real_valued() const { return node_->real_valued; }

  static Observable constant(Complex value) {
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::constant;
    n->scalar = value;
    n->real_valued = value.imag() == 0.0;
    return Observable(std::move(n));
  }

  static Observable coordinate(std::size_t axis = 0) {
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::coordinate;
    n->index = static_cast<long>(axis);
    n->real_valued = true;
    return Observable(std::move(n));
  }

  // e^{2 pi i n x} on the circle coordinate.
  static Observable fourier_mode(int order) {
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::fourier;
    n->index = order;
    n->real_valued = (order == 0);
    return Observable(std::move(n));
  }

  static Observable monomial(int degree) {
    if (degree < 0) throw ValidationError("monomial: degree must be >= 0");
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::monomial;
    n->index = degree;
    n->real_valued = true;
    return Observable(std::move(n));
  }

  // Finite-state function given by its value at each state.
  static Observable state_values(std::vector<Complex> values) {
    if (values.empty()) throw ValidationError("state_values: empty value vector");
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::state_values;
    n->state_count = values.size();
    n->real_valued = true;
    for (const Complex& v : values) n->real_valued = n->real_valued && v.imag() == 0.0;
    n->values = std::move(values);
    return Observable(std::move(n));
  }

  static Observable state_indicator(std::size_t state, std::size_t state_count) {
    if (state >= state_count) throw ValidationError("state_indicator: state out of range");
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::indicator;
    n->index = static_cast<long>(state);
    n->state_count = state_count;
    n->real_valued = true;
    return Observable(std::move(n));
  }

  friend Observable operator+(const Observable& a, const Observable& b) {
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::sum;
    n->lhs = a.node_;
    n->rhs = b.node_;
    n->real_valued = a.real_valued() && b.real_valued();
    return Observable(std::move(n));
  }

  friend Observable operator*(const Observable& a, const Observable& b) {
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::product;
    n->lhs = a.node_;
    n->rhs = b.node_;
    n->real_valued = a.real_valued() && b.real_valued();
    return Observable(std::move(n));
  }

  friend Observable operator*(Complex scalar, const Observable& a) {
    auto n = std::make_shared<detail::ObsNode>();
    n->kind = detail::ObsNode::Kind::scalar_multiple;
    n->scalar = scalar;
    n->lhs = a.node_;
    n->real_valued = a.real_valued() && scalar.imag() == 0.0;
    return Observable(std::move(n));
  }

  friend Observable operator-(const Observable& a, const Observable& b) {
    return a + Complex(-1.0, 0.0) * b;
  }

  // Structural equality of construction trees.
  friend bool same_structure(const Observable& a, const Observable& b) {
    return detail::same_node(a.node_, b.node_);
  }

  friend Observable koopman_apply(const DeterministicMap& map, const Observable& f);
  friend Observable clamp(const Observable& f, const ClampParams& band, ClampMode mode);

 private:
  explicit Observable(detail::NodePtr node) : node_(std::move(node)) {}
  detail::NodePtr node_;
};

// The Koopman action [Kf](x) = f(Tx), realized as exact composition.
inline Observable koopman_apply(const DeterministicMap& map, const Observable& f) {
  auto n = std::make_shared<detail::ObsNode>();
  n->kind = detail::ObsNode::Kind::composition;
  n->map = std::make_shared<const DeterministicMap>(map);
  n->lhs = f.node_;
  n->real_valued = f.real_valued();
  return Observable(std::move(n));
}

inline Observable clamp(const Observable& f, const ClampParams& band,
                        ClampMode mode = ClampMode::modulus) {
  auto n = std::make_shared<detail::ObsNode>();
  n->kind = detail::ObsNode::Kind::clamp;
  n->band = band;
  n->mode = mode;
  n->lhs = f.node_;
  n->real_valued = f.real_valued();
  return Observable(std::move(n));
}

// Ordered Galerkin basis; by convention the first member is the constant 1.
struct Dictionary {
  std::string label;
  std::vector<Observable> members;

  std::size_t size() const { return members.size(); }
};

// {1, e^{2 pi i x}, e^{-2 pi i x}, ..., e^{2 pi i N x}, e^{-2 pi i N x}}
inline Dictionary fourier_dictionary(int max_order) {
  if (max_order < 0) throw ValidationError("fourier dictionary: order must be >= 0");
  Dictionary d;
  d.label = "fourier-" + std::to_string(max_order);
  d.members.push_back(Observable::constant(1.0));
  for (int n = 1; n <= max_order; ++n) {
    d.members.push_back(Observable::fourier_mode(n));
    d.members.push_back(Observable::fourier_mode(-n));
  }
  return d;
}

// {1, x, x^2, ..., x^N}
inline Dictionary monomial_dictionary(int max_order) {
  if (max_order < 0) throw ValidationError("monomial dictionary: order must be >= 0");
  Dictionary d;
  d.label = "monomial-" + std::to_string(max_order);
  d.members.push_back(Observable::constant(1.0));
  for (int n = 1; n <= max_order; ++n) d.members.push_back(Observable::monomial(n));
  return d;
}

// {1, 1_{state 1}, ..., 1_{state m-1}}; spans all functions on m states while
// keeping the constant-first convention.
inline Dictionary indicator_dictionary(std::size_t state_count) {
  if (state_count < 1) throw ValidationError("indicator dictionary: needs at least one state");
  Dictionary d;
  d.label = "indicator-" + std::to_string(state_count);
  d.members.push_back(Observable::constant(1.0));
  for (std::size_t s = 1; s < state_count; ++s)
    d.members.push_back(Observable::state_indicator(s, state_count));
  return d;
}

// x -> sum_i coeffs[i] * dict[i](x)
inline Observable linear_combination(const std::vector<Complex>& coeffs, const Dictionary& d) {
  if (coeffs.size() != d.size())
    throw ValidationError("linear_combination: " + std::to_string(coeffs.size()) +
                          " coefficients for a dictionary of size " + std::to_string(d.size()));
  Observable acc = coeffs[0] * d.members[0];
  for (std::size_t i = 1; i < coeffs.size(); ++i) acc = acc + coeffs[i] * d.members[i];
  return acc;
}

}  // namespace koop
