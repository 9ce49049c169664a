#pragma once
// Spectrum membership and the multiplicative lattice structure.
//
// Membership is operationalized through Weyl's criterion: a unit vector psi
// with small ||K psi - lambda psi||_2 is evidence that lambda sits in the
// spectrum. On top of that this module provides
//   * product checks for pairs of credible eigenpairs (lambda*eta vs. the
//     residual of f*g),
//   * the clamp-based Weyl-sequence sweep psi_k = clamp(f) clamp(g) with
//     m = k^3 and the reported bound 2(1+|lambda|)/k,
//   * exact closure and power tests for finite spectra (Markov chains),
//   * the unit-disk diagnostic.
// The 2(1+|lambda|)/k bound is reported and compared, never asserted.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "koop/catalog.hpp"
#include "koop/measure.hpp"

namespace koop {

// A normalized approximate eigenfunction together with its measured residual.
struct WeylWitness {
  Observable psi;
  Complex lambda;
  double residual = 0.0;
  double quad_error = 0.0;
};

// Normalizes f and measures ||K psi - lambda psi||_2. The reported error
// estimate includes a rounding floor: the difference cannot be resolved below
// ~eps * (||K psi|| + |lambda|) no matter how fine the quadrature.
inline WeylWitness weyl_residual(const Observable& f, Complex lambda, const DeterministicMap& map,
                                 const SampleSet& s) {
  const NormEstimate nf = l2_norm_with_error(f, s);
  if (!(nf.value > 1e-300))
    throw NumericalError("weyl_residual: input has zero L2 norm on the sample set");

  const Observable psi = Complex(1.0 / nf.value, 0.0) * f;
  const Observable k_psi = koopman_apply(map, psi);
  const NormEstimate res = l2_norm_with_error(k_psi - lambda * psi, s);
  const double k_psi_norm = l2_norm(k_psi, s);

  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double floor = 8.0 * eps * (k_psi_norm + std::abs(lambda));

  WeylWitness w{psi, lambda, res.value, std::max(res.error, floor)};
  return w;
}

// Weighted residual ||P v - lambda v||_mu for a finite chain, with v
// normalized in the mu-weighted norm.
inline double markov_weyl_residual(const Eigen::VectorXcd& values, Complex lambda,
                                   const MarkovChain& chain, const std::vector<double>& mu) {
  const auto m = static_cast<std::size_t>(values.size());
  if (mu.size() != m) throw ValidationError("markov_weyl_residual: weight/state count mismatch");
  std::vector<double> sq(m);
  for (std::size_t i = 0; i < m; ++i) sq[i] = mu[i] * std::norm(values[static_cast<Eigen::Index>(i)]);
  const double norm = std::sqrt(pairwise_sum(sq));
  if (!(norm > 1e-300))
    throw NumericalError("markov_weyl_residual: zero-norm vector");
  const Eigen::VectorXcd diff =
      chain.transition_matrix().cast<Complex>() * values - lambda * values;
  for (std::size_t i = 0; i < m; ++i) sq[i] = mu[i] * std::norm(diff[static_cast<Eigen::Index>(i)]);
  return std::sqrt(pairwise_sum(sq)) / norm;
}

enum class LatticeVerdict { closed, inconclusive, violation };

inline std::string to_string(LatticeVerdict v) {
  switch (v) {
    case LatticeVerdict::closed: return "closed";
    case LatticeVerdict::inconclusive: return "inconclusive";
    case LatticeVerdict::violation: return "violation";
  }
  return "?";
}

struct LatticeRecord {
  Complex lambda{};
  Complex eta{};
  Complex product{};
  // Product residual (deterministic case) or distance to the nearest spectrum
  // member (finite case). Absent when the product's norm sat below the floor.
  std::optional<double> residual;
  double quad_error = 0.0;
  double tolerance_used = 0.0;
  LatticeVerdict verdict = LatticeVerdict::inconclusive;
  double input_residual_lambda = 0.0;
  double input_residual_eta = 0.0;
};

// Power-escape evidence for a finite spectrum: iterates lambda^r until the
// powers leave every tolerance ball around the spectrum.
struct PowerEscape {
  Complex base{};
  int max_power_checked = 1;
  bool escaped = false;
  int escape_power = 0;
  Complex escape_value{};
  double escape_distance = 0.0;
};

struct LatticeReport {
  std::vector<LatticeRecord> records;
  std::vector<LatticeRecord> violations;  // finite case: unmatched products
  std::vector<PowerEscape> power_tests;

  bool all_closed() const {
    for (const auto& r : records)
      if (r.verdict != LatticeVerdict::closed) return false;
    return !records.empty();
  }
  bool has_violation() const {
    if (!violations.empty()) return true;
    for (const auto& p : power_tests)
      if (p.escaped) return true;
    return false;
  }
};

// Checks whether the product of two credible eigenpairs is itself a credible
// eigenpair for lambda*eta. The product of approximate eigenfunctions need
// not be one, so a failed check is "inconclusive", never "violation".
inline LatticeRecord lattice_product_check(Complex lambda, const Observable& f, Complex eta,
                                           const Observable& g, const DeterministicMap& map,
                                           const SampleSet& s, double tol) {
  if (!(tol > 0.0)) throw ValidationError("lattice_product_check: tolerance must be positive");

  const WeylWitness wf = weyl_residual(f, lambda, map, s);
  if (wf.residual > std::max(tol, 10.0 * wf.quad_error))
    throw ValidationError("lattice_product_check: first input is not a credible eigenpair "
                          "(residual " + std::to_string(wf.residual) + ")");
  const WeylWitness wg = weyl_residual(g, eta, map, s);
  if (wg.residual > std::max(tol, 10.0 * wg.quad_error))
    throw ValidationError("lattice_product_check: second input is not a credible eigenpair "
                          "(residual " + std::to_string(wg.residual) + ")");

  LatticeRecord rec;
  rec.lambda = lambda;
  rec.eta = eta;
  rec.product = lambda * eta;
  rec.input_residual_lambda = wf.residual;
  rec.input_residual_eta = wg.residual;

  const Observable product = wf.psi * wg.psi;
  const NormEstimate pn = l2_norm_with_error(product, s);
  if (pn.value <= 1e-12) {
    // Degenerate product; nothing can be certified.
    rec.verdict = LatticeVerdict::inconclusive;
    rec.tolerance_used = tol;
    return rec;
  }

  const WeylWitness wp = weyl_residual(product, rec.product, map, s);
  rec.residual = wp.residual;
  rec.quad_error = wp.quad_error;
  rec.tolerance_used = std::max(tol, 10.0 * wp.quad_error);
  rec.verdict = (wp.residual <= rec.tolerance_used) ? LatticeVerdict::closed
                                                    : LatticeVerdict::inconclusive;
  return rec;
}

struct WeylSequenceStep {
  int k;
  double m;  // = k^3
  Observable psi;
  double product_norm;  // pre-normalization norm of clamp(f)*clamp(g)
  double residual;
  double quad_error;
  double bound;  // 2 (1 + |lambda|) / k
  bool bound_satisfied;
};

struct WeylSequenceTrace {
  Complex lambda{};
  Complex eta{};
  Complex product{};
  ClampMode mode = ClampMode::modulus;
  std::vector<WeylSequenceStep> steps;
  // The sequence index threshold n_k = max{N_{f,k}, N_{g,k}} has no finite
  // counterpart when f and g are fixed functions.
  std::string n_k = "not applicable";
};

// The clamp-based sweep: for k = 1..k_max set m = k^3, clamp both inputs into
// [1/k, m], normalize the product, and measure its residual against
// lambda*eta next to the reported 2(1+|lambda|)/k bound.
inline WeylSequenceTrace build_weyl_sequence(const Observable& f, const Observable& g,
                                             Complex lambda, Complex eta,
                                             const DeterministicMap& map, const SampleSet& s,
                                             int k_max, ClampMode mode = ClampMode::modulus,
                                             double credibility_tol = 1e-6) {
  if (k_max < 1) throw ValidationError("build_weyl_sequence: k_max must be >= 1");

  const WeylWitness wf = weyl_residual(f, lambda, map, s);
  if (wf.residual > std::max(credibility_tol, 10.0 * wf.quad_error))
    throw ValidationError("build_weyl_sequence: first input is not a credible eigenpair");
  const WeylWitness wg = weyl_residual(g, eta, map, s);
  if (wg.residual > std::max(credibility_tol, 10.0 * wg.quad_error))
    throw ValidationError("build_weyl_sequence: second input is not a credible eigenpair");

  WeylSequenceTrace trace;
  trace.lambda = lambda;
  trace.eta = eta;
  trace.product = lambda * eta;
  trace.mode = mode;

  for (int k = 1; k <= k_max; ++k) {
    const double kd = static_cast<double>(k);
    const double m = kd * kd * kd;
    const ClampParams band(m, kd);

    const Observable clipped = clamp(wf.psi, band, mode) * clamp(wg.psi, band, mode);
    const NormEstimate pn = l2_norm_with_error(clipped, s);
    const double norm_floor = 1.0 / (kd * kd) - 1e-12;
    if (pn.value < norm_floor)
      throw NumericalError("build_weyl_sequence: clamp-product norm " +
                           std::to_string(pn.value) + " fell below the 1/k^2 floor at k = " +
                           std::to_string(k) + "; this should be impossible");

    const WeylWitness wk = weyl_residual(clipped, trace.product, map, s);
    const double bound = 2.0 * (1.0 + std::abs(lambda)) / kd;
    trace.steps.push_back(WeylSequenceStep{k, m, wk.psi, pn.value, wk.residual, wk.quad_error,
                                           bound, wk.residual <= bound});
  }
  return trace;
}

// Exact closure check for a finite spectrum: every pairwise product must land
// within tol of some member. Multiplicities are ignored.
inline LatticeReport finite_spectrum_lattice_closure(const std::vector<Complex>& spectrum,
                                                     double tol) {
  if (spectrum.empty())
    throw ValidationError("finite_spectrum_lattice_closure: empty spectrum");
  if (!(tol > 0.0))
    throw ValidationError("finite_spectrum_lattice_closure: tolerance must be positive");

  const auto distance_to_spectrum = [&](Complex z) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& w : spectrum) best = std::min(best, std::abs(z - w));
    return best;
  };

  // Distinct representatives; the spectrum is treated as a set.
  std::vector<Complex> reps;
  for (const Complex& z : spectrum) {
    bool seen = false;
    for (const Complex& r : reps)
      if (std::abs(z - r) <= tol) { seen = true; break; }
    if (!seen) reps.push_back(z);
  }

  LatticeReport report;
  for (const Complex& lambda : reps) {
    for (const Complex& eta : reps) {
      LatticeRecord rec;
      rec.lambda = lambda;
      rec.eta = eta;
      rec.product = lambda * eta;
      rec.residual = distance_to_spectrum(rec.product);
      rec.tolerance_used = tol;
      rec.verdict =
          (*rec.residual <= tol) ? LatticeVerdict::closed : LatticeVerdict::violation;
      if (rec.verdict == LatticeVerdict::violation) report.violations.push_back(rec);
      report.records.push_back(rec);
    }
  }

  // Power test: for |lambda| bounded away from 1, the powers lambda^r must
  // eventually leave the finite spectrum.
  double max_mod = 0.0;
  for (const Complex& z : spectrum) max_mod = std::max(max_mod, std::abs(z));
  constexpr int kPowerCap = 100000;
  for (const Complex& lambda : reps) {
    const double mod = std::abs(lambda);
    if (std::abs(mod - 1.0) <= tol || mod <= tol) continue;

    PowerEscape pe;
    pe.base = lambda;
    int r_max = kPowerCap;
    if (mod < 1.0)
      r_max = std::min(r_max,
                       static_cast<int>(std::ceil(std::log(tol) / std::log(mod))));
    Complex z = lambda;
    int r = 1;
    while (r < r_max) {
      ++r;
      z *= lambda;
      if (mod > 1.0 && std::abs(z) > max_mod + tol) {
        pe.escaped = true;
        break;
      }
      const double dist = distance_to_spectrum(z);
      if (dist > tol) {
        pe.escaped = true;
        pe.escape_distance = dist;
        break;
      }
    }
    pe.max_power_checked = r;
    if (pe.escaped) {
      pe.escape_power = r;
      pe.escape_value = z;
      if (pe.escape_distance == 0.0) pe.escape_distance = distance_to_spectrum(z);
    }
    report.power_tests.push_back(pe);
  }
  return report;
}

struct UnitDiskReport {
  bool ok = true;
  double max_modulus = 0.0;
  std::vector<Complex> offenders;
};

// Bounded Koopman operators have their spectrum inside the closed unit disk.
inline UnitDiskReport unit_disk_check(const std::vector<Complex>& spectrum, double tol) {
  UnitDiskReport rep;
  for (const Complex& z : spectrum) {
    const double mod = std::abs(z);
    rep.max_modulus = std::max(rep.max_modulus, mod);
    if (mod > 1.0 + tol) rep.offenders.push_back(z);
  }
  rep.ok = rep.offenders.empty();
  return rep;
}

}  // namespace koop
