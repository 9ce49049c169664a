#pragma once
// Finite-dimensional Galerkin (EDMD) surrogate of the Koopman operator on a
// dictionary: Gram matrix G_ij = <d_j, d_i>, action matrix A_ij = <K d_j, d_i>,
// least-squares solve G K = A through a truncated eigendecomposition of G,
// and a dense nonsymmetric eigensolver (Hessenberg + shifted QR via Eigen's
// ComplexEigenSolver).
//
// Eigenvalues are ordered by modulus descending, then by argument in
// [-pi, pi). Eigenvectors are phase-fixed (largest coefficient real positive)
// and lifted to observables with unit L2 norm on the sample set.
//
// Spurious eigenvalues of the non-normal surrogate are not filtered here; the
// Weyl residual attached to every pair is the membership evidence.

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "koop/lattice.hpp"

namespace koop {

struct GramPair {
  Eigen::MatrixXcd gram;    // G_ij = <d_j, d_i>
  Eigen::MatrixXcd action;  // A_ij = <K d_j, d_i>
  double gram_condition = 0.0;
  double gram_min_eigenvalue = 0.0;
};

struct KoopmanMatrix {
  Eigen::MatrixXcd matrix;
  double truncation_threshold = 0.0;
};

struct EigenPairRecord {
  Complex value{};
  Eigen::VectorXcd coefficients;  // over the dictionary, unit L2 as a function
  Observable fn;
  double matrix_residual = 0.0;  // ||K v - lambda v|| / ||v||, Euclidean
  double weyl_residual = 0.0;
  double weyl_quad_error = 0.0;
  double value_error = 0.0;  // statistical / refinement estimate, see compute_spectrum
};

struct EigenDecomposition {
  std::vector<EigenPairRecord> pairs;

  std::vector<Complex> eigenvalues() const {
    std::vector<Complex> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(p.value);
    return out;
  }
};

namespace detail {

// Argument in [-pi, pi); the branch cut at pi is folded down so sorting is
// total.
inline double sort_argument(Complex z) {
  double a = std::arg(z);
  if (a >= 3.14159265358979323846) a = -3.14159265358979323846;
  return a;
}

inline std::vector<std::size_t> spectral_order(const Eigen::VectorXcd& values) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(values[static_cast<Eigen::Index>(a)]);
    const double mb = std::abs(values[static_cast<Eigen::Index>(b)]);
    if (ma != mb) return ma > mb;
    return sort_argument(values[static_cast<Eigen::Index>(a)]) <
           sort_argument(values[static_cast<Eigen::Index>(b)]);
  });
  return idx;
}

// Dense nonsymmetric eigendecomposition with deterministic ordering and
// phase-fixed unit (Euclidean) eigenvectors.
inline void dense_eigensolve(const Eigen::MatrixXcd& matrix, Eigen::VectorXcd& values,
                             Eigen::MatrixXcd& vectors) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, true);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecompose: QR iteration failed to converge on a matrix of size " +
                         std::to_string(matrix.rows()));
  const auto order = spectral_order(solver.eigenvalues());
  const Eigen::Index n = matrix.rows();
  values.resize(n);
  vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(j)]);
    values[j] = solver.eigenvalues()[src];
    Eigen::VectorXcd v = solver.eigenvectors().col(src);
    // Phase convention: the largest-modulus coefficient is real positive.
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = std::abs(v[i]);
      if (m > best) { best = m; imax = i; }
    }
    if (best > 0.0) v *= std::conj(v[imax]) / std::abs(v[imax]);
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    vectors.col(j) = v;
  }
}

inline std::vector<Complex> sorted_eigenvalues(const Eigen::MatrixXcd& matrix) {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
  dense_eigensolve(matrix, values, vectors);
  return std::vector<Complex>(values.data(), values.data() + values.size());
}

}  // namespace detail

// EDMD assembly over the sample set. Both matrices are accumulated with the
// pairwise-tree reduction; G is symmetrized by averaging with its adjoint.
inline GramPair assemble(const Dictionary& dict, const DeterministicMap& map,
                         const SampleSet& s) {
  const std::size_t n_dict = dict.size();
  if (n_dict == 0) throw ValidationError("assemble: empty dictionary");
  if (s.size() == 0) throw ValidationError("assemble: empty sample set");

  // Tabulate d_i(x_p) and d_i(T x_p).
  std::vector<std::vector<Complex>> at_x(n_dict), at_tx(n_dict);
  SampleSet images = s;
  for (std::size_t p = 0; p < s.size(); ++p) images.points[p] = map.apply(s.points[p]);
  for (std::size_t i = 0; i < n_dict; ++i) {
    at_x[i] = detail::evaluate_all(dict.members[i], s);
    at_tx[i] = detail::evaluate_all(dict.members[i], images);
  }

  GramPair gp;
  gp.gram.resize(static_cast<Eigen::Index>(n_dict), static_cast<Eigen::Index>(n_dict));
  gp.action.resize(static_cast<Eigen::Index>(n_dict), static_cast<Eigen::Index>(n_dict));
  std::vector<Complex> terms(s.size());
  for (std::size_t i = 0; i < n_dict; ++i) {
    for (std::size_t j = 0; j < n_dict; ++j) {
      for (std::size_t p = 0; p < s.size(); ++p)
        terms[p] = s.weights[p] * at_x[j][p] * std::conj(at_x[i][p]);
      gp.gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pairwise_sum(terms);
      for (std::size_t p = 0; p < s.size(); ++p)
        terms[p] = s.weights[p] * at_tx[j][p] * std::conj(at_x[i][p]);
      gp.action(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pairwise_sum(terms);
    }
  }
  if (!gp.gram.allFinite() || !gp.action.allFinite())
    throw NumericalError("assemble: non-finite matrix entries");

  gp.gram = 0.5 * (gp.gram + gp.gram.adjoint().eval());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gp.gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("assemble: Gram eigensolve failed");
  const double lambda_min = es.eigenvalues().minCoeff();
  const double lambda_max = es.eigenvalues().maxCoeff();
  if (lambda_min < -1e-10)
    throw NumericalError("assemble: Gram matrix is not positive semidefinite (min eigenvalue " +
                         std::to_string(lambda_min) + ")");
  gp.gram_min_eigenvalue = lambda_min;
  gp.gram_condition = lambda_max / std::max(lambda_min, lambda_max * 1e-300);
  return gp;
}

// Least-squares solve of G K = A: eigendecompose the Hermitian G and invert
// only the eigenvalues above reg * lambda_max (a truncated pseudoinverse).
inline KoopmanMatrix solve_koopman(const GramPair& gp, double reg) {
  if (!(reg >= 0.0)) throw ValidationError("solve_koopman: regularization must be >= 0");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gp.gram);
  if (es.info() != Eigen::Success) throw NumericalError("solve_koopman: Gram eigensolve failed");
  const Eigen::VectorXd evals = es.eigenvalues();
  const double lambda_max = evals.maxCoeff();
  if (!(lambda_max > 1e-300)) throw NumericalError("solve_koopman: Gram matrix is numerically zero");

  const double threshold = reg * lambda_max;
  Eigen::VectorXd inverted = Eigen::VectorXd::Zero(evals.size());
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals[i] > threshold && evals[i] > 0.0) {
      inverted[i] = 1.0 / evals[i];
      ++kept;
    }
  }
  if (kept == 0) throw NumericalError("solve_koopman: every Gram eigenvalue fell below the cutoff");

  KoopmanMatrix km;
  km.truncation_threshold = threshold;
  km.matrix = es.eigenvectors() * inverted.asDiagonal() *
              es.eigenvectors().adjoint() * gp.action;
  return km;
}

// Full decomposition of the Koopman surrogate, with eigenvectors lifted to
// unit-L2 observables and Weyl residuals measured on the sample set.
inline EigenDecomposition eigendecompose(const KoopmanMatrix& km, const Dictionary& dict,
                                         const DeterministicMap& map, const SampleSet& s) {
  const Eigen::Index n = km.matrix.rows();
  if (n > 512) throw ValidationError("eigendecompose: matrices beyond size 512 are out of scope");
  if (n != static_cast<Eigen::Index>(dict.size()))
    throw ValidationError("eigendecompose: matrix size does not match the dictionary");

  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
  detail::dense_eigensolve(km.matrix, values, vectors);

  EigenDecomposition dec;
  for (Eigen::Index j = 0; j < n; ++j) {
    EigenPairRecord rec;
    rec.value = values[j];
    Eigen::VectorXcd v = vectors.col(j);
    rec.matrix_residual = (km.matrix * v - values[j] * v).norm() / v.norm();
    if (rec.matrix_residual > 1e-8)
      throw NumericalError("eigendecompose: eigenpair " + std::to_string(j) +
                           " has matrix residual " + std::to_string(rec.matrix_residual));

    std::vector<Complex> coeffs(v.data(), v.data() + v.size());
    Observable lifted = linear_combination(coeffs, dict);
    const double fnorm = l2_norm(lifted, s);
    if (fnorm > 1e-300) {
      v /= fnorm;
      lifted = Complex(1.0 / fnorm, 0.0) * lifted;
    }
    rec.coefficients = v;

    const WeylWitness w = weyl_residual(lifted, rec.value, map, s);
    rec.fn = w.psi;
    rec.weyl_residual = w.residual;
    rec.weyl_quad_error = w.quad_error;
    dec.pairs.push_back(std::move(rec));
  }
  return dec;
}

// Spectrum of a finite Markov chain: the operator matrix is the transition
// matrix itself, eigenvectors are lifted as state-value functions, and the
// Weyl residual is the mu-weighted matrix residual (quadrature is exact).
inline EigenDecomposition markov_eigendecomposition(const MarkovChain& chain,
                                                    const SampleSet& s) {
  if (s.method != SampleMethod::exact_discrete ||
      s.size() != chain.state_count())
    throw ValidationError("markov_eigendecomposition: needs the exact-discrete sample set of "
                          "the chain's state space");

  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
  detail::dense_eigensolve(markov_koopman_matrix(chain), values, vectors);

  EigenDecomposition dec;
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    EigenPairRecord rec;
    rec.value = values[j];
    Eigen::VectorXcd v = vectors.col(j);
    rec.matrix_residual =
        (chain.transition_matrix().cast<Complex>() * v - values[j] * v).norm() / v.norm();
    if (rec.matrix_residual > 1e-8)
      throw NumericalError("markov_eigendecomposition: eigenpair " + std::to_string(j) +
                           " has matrix residual " + std::to_string(rec.matrix_residual));

    // Normalize in the mu-weighted norm and lift as a state-value function.
    std::vector<double> sq(chain.state_count());
    for (std::size_t i = 0; i < chain.state_count(); ++i)
      sq[i] = s.weights[i] * std::norm(v[static_cast<Eigen::Index>(i)]);
    const double mu_norm = std::sqrt(pairwise_sum(sq));
    if (mu_norm > 1e-300) v /= mu_norm;
    rec.coefficients = v;
    rec.fn = Observable::state_values(std::vector<Complex>(v.data(), v.data() + v.size()));
    rec.weyl_residual = markov_weyl_residual(v, rec.value, chain, s.weights);
    rec.weyl_quad_error = 0.0;
    rec.value_error = 0.0;
    dec.pairs.push_back(std::move(rec));
  }
  return dec;
}

struct SpectrumResult {
  EigenDecomposition decomposition;
  double gram_condition = 0.0;
  double truncation_threshold = 0.0;
  double representative_quad_error = 0.0;
};

namespace detail {

inline SampleSet subsample(const SampleSet& s, std::size_t begin, std::size_t stride) {
  SampleSet out;
  out.seed = s.seed;
  out.method = s.method;
  std::vector<double> w;
  for (std::size_t p = begin; p < s.size(); p += stride) {
    out.points.push_back(s.points[p]);
    w.push_back(s.weights[p]);
  }
  const double mass = pairwise_sum(w);
  for (double& x : w) x /= mass;
  out.weights = std::move(w);
  return out;
}

inline SampleSet contiguous_block(const SampleSet& s, std::size_t block, std::size_t count) {
  SampleSet out;
  out.seed = s.seed;
  out.method = s.method;
  const std::size_t lo = block * s.size() / count;
  const std::size_t hi = (block + 1) * s.size() / count;
  std::vector<double> w;
  for (std::size_t p = lo; p < hi; ++p) {
    out.points.push_back(s.points[p]);
    w.push_back(s.weights[p]);
  }
  const double mass = pairwise_sum(w);
  for (double& x : w) x /= mass;
  out.weights = std::move(w);
  return out;
}

// Nearest-value match of a perturbed spectrum against the reference.
inline std::vector<double> match_distances(const std::vector<Complex>& reference,
                                           const std::vector<Complex>& other) {
  std::vector<double> dist(reference.size(), 0.0);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& z : other) best = std::min(best, std::abs(reference[i] - z));
    dist[i] = best;
  }
  return dist;
}

}  // namespace detail

// Assemble, solve, and decompose, attaching a per-eigenvalue error estimate:
//   grid           nearest-match drift against the half-density subgrid
//   monte-carlo    batch-means standard error over 10 contiguous blocks
//   exact-discrete zero
// plus a numerical floor eps * cond(G) * (1 + max |lambda|) * N reflecting
// the conditioning of the least-squares step.
inline SpectrumResult compute_spectrum(const Dictionary& dict, const DeterministicMap& map,
                                       const SampleSet& s, double reg) {
  SpectrumResult result;
  const GramPair gp = assemble(dict, map, s);
  const KoopmanMatrix km = solve_koopman(gp, reg);
  result.decomposition = eigendecompose(km, dict, map, s);
  result.gram_condition = gp.gram_condition;
  result.truncation_threshold = km.truncation_threshold;
  result.representative_quad_error =
      l2_norm_with_error(dict.members.back(), s).error;

  const std::vector<Complex> full = result.decomposition.eigenvalues();
  double max_mod = 0.0;
  for (const Complex& z : full) max_mod = std::max(max_mod, std::abs(z));
  const double floor = std::numeric_limits<double>::epsilon() * gp.gram_condition *
                       (1.0 + max_mod) * static_cast<double>(dict.size());

  std::vector<double> estimate(full.size(), 0.0);
  if (s.method == SampleMethod::grid_1d && s.size() >= 4) {
    const SampleSet coarse = detail::subsample(s, 0, 2);
    const auto coarse_eigs = detail::sorted_eigenvalues(
        solve_koopman(assemble(dict, map, coarse), reg).matrix);
    estimate = detail::match_distances(full, coarse_eigs);
  } else if (s.method == SampleMethod::monte_carlo) {
    constexpr std::size_t kBlocks = 10;
    if (s.size() >= 10 * kBlocks) {
      std::vector<std::vector<double>> drift(full.size());
      for (std::size_t b = 0; b < kBlocks; ++b) {
        const SampleSet block = detail::contiguous_block(s, b, kBlocks);
        const auto block_eigs = detail::sorted_eigenvalues(
            solve_koopman(assemble(dict, map, block), reg).matrix);
        const auto d = detail::match_distances(full, block_eigs);
        for (std::size_t i = 0; i < full.size(); ++i) drift[i].push_back(d[i]);
      }
      for (std::size_t i = 0; i < full.size(); ++i) {
        double mean = 0.0;
        for (double d : drift[i]) mean += d;
        mean /= static_cast<double>(kBlocks);
        // Blocks use n/B points, so their drift from the full-sample value
        // runs ~sqrt(B) times the full-sample error.
        estimate[i] = mean / std::sqrt(static_cast<double>(kBlocks));
      }
    }
  }
  for (std::size_t i = 0; i < full.size(); ++i)
    result.decomposition.pairs[i].value_error = std::max(estimate[i], floor);
  return result;
}

}  // namespace koop
