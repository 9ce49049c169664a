#pragma once
// Reference probability measures and their reproducible quadrature:
//   uniform-circle   deterministic equispaced grid (left endpoints) or MC
//   uniform-box      midpoint grid (d = 1) or MC
//   gaussian         equal-mass inverse-CDF grid (d = 1) or MC
//   finite-discrete  exact summation, one point per state
// Every quadrature value carries an error estimate: the refinement difference
// against the half-density subgrid for grids, the weighted sample standard
// error for MC, and zero for exact summation. All sums use the fixed-order
// pairwise reduction, so results are reproducible across thread counts.

#include <algorithm>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "koop/observable.hpp"
#include "koop/rng.hpp"

namespace koop {

enum class MeasureKind { uniform_circle, uniform_box, gaussian, finite_discrete };
enum class SampleMethod { monte_carlo, grid_1d, exact_discrete };

inline std::string to_string(SampleMethod m) {
  switch (m) {
    case SampleMethod::monte_carlo: return "monte-carlo";
    case SampleMethod::grid_1d: return "grid-1d";
    case SampleMethod::exact_discrete: return "exact-discrete";
  }
  return "?";
}

inline std::string to_string(MeasureKind k) {
  switch (k) {
    case MeasureKind::uniform_circle: return "uniform-circle";
    case MeasureKind::uniform_box: return "uniform-box";
    case MeasureKind::gaussian: return "gaussian";
    case MeasureKind::finite_discrete: return "finite-discrete";
  }
  return "?";
}

class ProbabilityMeasure {
 public:
  static ProbabilityMeasure uniform_circle() {
    return ProbabilityMeasure(MeasureKind::uniform_circle, 1);
  }

  static ProbabilityMeasure uniform_box(std::vector<double> lower, std::vector<double> upper) {
    if (lower.empty() || lower.size() != upper.size())
      throw ValidationError("uniform-box: lower/upper bounds must be nonempty and match");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!is_finite(lower[i]) || !is_finite(upper[i]) || !(lower[i] < upper[i]))
        throw ValidationError("uniform-box: bounds must satisfy lower < upper in axis " +
                              std::to_string(i));
    ProbabilityMeasure mu(MeasureKind::uniform_box, lower.size());
    mu.lower_ = std::move(lower);
    mu.upper_ = std::move(upper);
    return mu;
  }

  static ProbabilityMeasure gaussian(std::vector<double> mean, std::vector<double> variance) {
    if (mean.empty() || mean.size() != variance.size())
      throw ValidationError("gaussian: mean/variance must be nonempty and match");
    for (std::size_t i = 0; i < variance.size(); ++i)
      if (!is_finite(variance[i]) || !(variance[i] > 0.0))
        throw ValidationError("gaussian: variance must be strictly positive in axis " +
                              std::to_string(i));
    for (double m : mean)
      if (!is_finite(m)) throw ValidationError("gaussian: mean must be finite");
    ProbabilityMeasure mu(MeasureKind::gaussian, mean.size());
    mu.mean_ = std::move(mean);
    mu.variance_ = std::move(variance);
    return mu;
  }

  static ProbabilityMeasure finite_discrete(std::vector<double> weights) {
    if (weights.size() < 1) throw ValidationError("finite-discrete: needs at least one state");
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!is_finite(weights[i]) || weights[i] < 0.0)
        throw ValidationError("finite-discrete: weight " + std::to_string(i) +
                              " is not a probability");
      total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ValidationError("finite-discrete: weights sum to " + std::to_string(total) +
                            ", expected 1");
    ProbabilityMeasure mu(MeasureKind::finite_discrete, 1);
    mu.weights_ = std::move(weights);
    return mu;
  }

  MeasureKind kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& variance() const { return variance_; }
  const std::vector<double>& state_weights() const { return weights_; }

 private:
  ProbabilityMeasure(MeasureKind k, std::size_t dim) : kind_(k), dim_(dim) {}
  MeasureKind kind_;
  std::size_t dim_;
  std::vector<double> lower_, upper_, mean_, variance_, weights_;
};

// A reproducible weighted point set realizing integration against a measure.
struct SampleSet {
  std::vector<State> points;
  std::vector<double> weights;
  std::uint64_t seed = 0;
  SampleMethod method = SampleMethod::monte_carlo;

  std::size_t size() const { return points.size(); }
};

inline SampleSet sample(const ProbabilityMeasure& mu, std::size_t n, std::uint64_t seed,
                        SampleMethod method) {
  SampleSet s;
  s.seed = seed;
  s.method = method;

  if (mu.kind() == MeasureKind::finite_discrete) {
    if (method != SampleMethod::exact_discrete)
      throw ValidationError("sample: finite-discrete measures use the exact-discrete method");
    const auto& w = mu.state_weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
      s.points.push_back({static_cast<double>(i)});
      s.weights.push_back(w[i]);
    }
    return s;
  }
  if (method == SampleMethod::exact_discrete)
    throw ValidationError("sample: exact-discrete applies only to finite-discrete measures");
  if (n == 0) throw ValidationError("sample: need at least one point");

  const std::size_t d = mu.dimension();
  if (method == SampleMethod::grid_1d) {
    if (d != 1)
      throw ValidationError("sample: grid-1d requires a 1-dimensional measure, got d=" +
                            std::to_string(d));
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      double x = 0.0;
      switch (mu.kind()) {
        case MeasureKind::uniform_circle:
          // Left endpoints j/n; on the circle this is the trapezoid rule.
          x = static_cast<double>(j) / static_cast<double>(n);
          break;
        case MeasureKind::uniform_box:
          x = mu.lower()[0] +
              (static_cast<double>(j) + 0.5) / static_cast<double>(n) *
                  (mu.upper()[0] - mu.lower()[0]);
          break;
        case MeasureKind::gaussian:
          // Equal-mass grid: the quantile of the cell midpoint.
          x = mu.mean()[0] +
              std::sqrt(mu.variance()[0]) *
                  inverse_normal_cdf((static_cast<double>(j) + 0.5) / static_cast<double>(n));
          break;
        case MeasureKind::finite_discrete:
          break;  // handled above
      }
      s.points.push_back({x});
      s.weights.push_back(w);
    }
    return s;
  }

  // Monte Carlo: coordinate c of point j consumes counter j*d + c.
  const CounterRng rng(seed);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    State x(d);
    for (std::size_t c = 0; c < d; ++c) {
      const std::uint64_t counter = j * d + c;
      switch (mu.kind()) {
        case MeasureKind::uniform_circle:
          x[c] = rng.uniform01(counter);
          break;
        case MeasureKind::uniform_box:
          x[c] = mu.lower()[c] + rng.uniform01(counter) * (mu.upper()[c] - mu.lower()[c]);
          break;
        case MeasureKind::gaussian:
          x[c] = mu.mean()[c] + std::sqrt(mu.variance()[c]) * rng.normal(counter);
          break;
        case MeasureKind::finite_discrete:
          break;  // handled above
      }
    }
    s.points.push_back(std::move(x));
    s.weights.push_back(w);
  }
  return s;
}

// Marks a mu-measurable subset of the state space. Predicates must be pure:
// the same state always yields the same answer.
struct RestrictionIndicator {
  std::function<bool(const State&)> predicate;
  std::string label;

  bool operator()(const State& x) const { return predicate(x); }

  static RestrictionIndicator everything() {
    return {[](const State&) { return true; }, "all"};
  }
  static RestrictionIndicator nothing() {
    return {[](const State&) { return false; }, "empty"};
  }
  static RestrictionIndicator coordinate_below(std::size_t axis, double threshold) {
    return {[axis, threshold](const State& x) { return x.at(axis) < threshold; },
            "x" + std::to_string(axis) + " < " + std::to_string(threshold)};
  }
};

struct Quadrature {
  Complex value{};
  double error = 0.0;  // method-dependent estimate, see header comment
};

struct NormEstimate {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

inline std::vector<Complex> evaluate_all(const Observable& f, const SampleSet& s) {
  std::vector<Complex> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    try {
      out[i] = f(s.points[i]);
    } catch (const DomainError& e) {
      throw DomainError("quadrature: evaluation failed at sample point " + std::to_string(i) +
                        " = " + format_state(s.points[i]) + ": " + e.what());
    } catch (const Error& e) {
      throw NumericalError("quadrature: evaluation failed at sample point " + std::to_string(i) +
                           " = " + format_state(s.points[i]) + ": " + e.what());
    }
    if (!is_finite(out[i]))
      throw NumericalError("quadrature: non-finite value at sample point " + std::to_string(i) +
                           " = " + format_state(s.points[i]));
  }
  return out;
}

// Integrate tabulated values h_i against the sample weights, with the
// method's error estimate.
inline Quadrature integrate(const std::vector<Complex>& h, const SampleSet& s) {
  std::vector<Complex> terms(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) terms[i] = s.weights[i] * h[i];
  Quadrature q;
  q.value = pairwise_sum(terms);

  switch (s.method) {
    case SampleMethod::exact_discrete:
      q.error = 0.0;
      break;
    case SampleMethod::monte_carlo: {
      // Weighted sample standard error: sqrt(sum w_i^2 |h_i - I|^2).
      std::vector<double> sq(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) {
        const Complex dev = h[i] - q.value;
        sq[i] = s.weights[i] * s.weights[i] * std::norm(dev);
      }
      q.error = std::sqrt(pairwise_sum(sq));
      break;
    }
    case SampleMethod::grid_1d: {
      // Refinement difference against the even-index subgrid (the n/2 grid on
      // the circle), weights renormalized to unit mass.
      if (h.size() < 2) {
        q.error = 0.0;
        break;
      }
      std::vector<Complex> coarse_terms;
      std::vector<double> coarse_w;
      for (std::size_t i = 0; i < h.size(); i += 2) {
        coarse_terms.push_back(s.weights[i] * h[i]);
        coarse_w.push_back(s.weights[i]);
      }
      const double mass = pairwise_sum(coarse_w);
      const Complex coarse = pairwise_sum(coarse_terms) / mass;
      q.error = std::abs(q.value - coarse);
      break;
    }
  }
  return q;
}

inline NormEstimate norm_from_square(const Quadrature& sq) {
  const double value = std::sqrt(std::max(0.0, sq.value.real()));
  NormEstimate n;
  n.value = value;
  n.error = (value * value > sq.error) ? sq.error / (2.0 * value) : std::sqrt(sq.error);
  return n;
}

}  // namespace detail

// <f, g> = sum_i w_i f(x_i) conj(g(x_i)). Conjugate-symmetric exactly:
// swapping arguments conjugates every term and the pairwise sum alike.
inline Quadrature inner_product_with_error(const Observable& f, const Observable& g,
                                           const SampleSet& s) {
  const auto fv = detail::evaluate_all(f, s);
  const auto gv = detail::evaluate_all(g, s);
  std::vector<Complex> h(fv.size());
  for (std::size_t i = 0; i < fv.size(); ++i) h[i] = fv[i] * std::conj(gv[i]);
  return detail::integrate(h, s);
}

inline Complex inner_product(const Observable& f, const Observable& g, const SampleSet& s) {
  return inner_product_with_error(f, g, s).value;
}

inline NormEstimate l2_norm_with_error(const Observable& f, const SampleSet& s) {
  const auto fv = detail::evaluate_all(f, s);
  std::vector<Complex> h(fv.size());
  for (std::size_t i = 0; i < fv.size(); ++i) h[i] = Complex(std::norm(fv[i]), 0.0);
  return detail::norm_from_square(detail::integrate(h, s));
}

inline double l2_norm(const Observable& f, const SampleSet& s) {
  return l2_norm_with_error(f, s).value;
}

// Same sum as l2_norm but only over points inside A. Points outside
// contribute exact zeros, so the reduction tree matches l2_norm and
// restricted_norm(f, s, everything) == l2_norm(f, s) bit-for-bit.
inline NormEstimate restricted_norm_with_error(const Observable& f, const SampleSet& s,
                                               const RestrictionIndicator& region) {
  const auto fv = detail::evaluate_all(f, s);
  std::vector<Complex> h(fv.size());
  for (std::size_t i = 0; i < fv.size(); ++i)
    h[i] = region(s.points[i]) ? Complex(std::norm(fv[i]), 0.0) : Complex(0.0, 0.0);
  return detail::norm_from_square(detail::integrate(h, s));
}

inline double restricted_norm(const Observable& f, const SampleSet& s,
                              const RestrictionIndicator& region) {
  return restricted_norm_with_error(f, s, region).value;
}

// CSV dump: index, coordinates..., weight.
inline void dump_samples_csv(const SampleSet& s, std::ostream& os) {
  const std::size_t d = s.points.empty() ? 0 : s.points.front().size();
  os << "index";
  for (std::size_t c = 0; c < d; ++c) os << ",x" << c;
  os << ",weight\n";
  char buf[64];
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << i;
    for (std::size_t c = 0; c < d; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.points[i][c]);
      os << ',' << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", s.weights[i]);
    os << ',' << buf << '\n';
  }
}

}  // namespace koop
