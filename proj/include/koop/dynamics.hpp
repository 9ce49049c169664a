#pragma once
// Discrete-time systems: deterministic maps on the circle / R^d and
// finite-state Markov chains. Both are immutable value types and safe for
// concurrent use; apply() is pure.

#include <Eigen/Dense>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "koop/common.hpp"

namespace koop {

enum class MapKind {
  circle_rotation,
  doubling,
  affine_contraction,
  logistic,
  composition,
};

// Reduce into the fundamental domain [0,1). Ties at 1.0 map to 0.0 so the
// reduction is bit-reproducible.
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

class DeterministicMap {
 public:
  static DeterministicMap rotation(double alpha) {
    if (!is_finite(alpha)) throw ValidationError("rotation: angle must be finite");
    DeterministicMap m(MapKind::circle_rotation, 1);
    m.alpha_ = alpha;
    return m;
  }

  static DeterministicMap doubling() { return DeterministicMap(MapKind::doubling, 1); }

  // x -> scale .* x + offset on R^d with diagonal scale, |scale_i| in (0,1).
  static DeterministicMap affine_contraction(std::vector<double> scale,
                                             std::vector<double> offset) {
    if (scale.empty()) throw ValidationError("affine_contraction: empty scale");
    if (offset.empty()) offset.assign(scale.size(), 0.0);
    if (offset.size() != scale.size())
      throw ValidationError("affine_contraction: scale/offset dimension mismatch");
    for (double a : scale)
      if (!(std::abs(a) > 0.0 && std::abs(a) < 1.0))
        throw ValidationError("affine_contraction: |scale| entries must lie in (0,1)");
    for (double b : offset)
      if (!is_finite(b)) throw ValidationError("affine_contraction: offset must be finite");
    DeterministicMap m(MapKind::affine_contraction, scale.size());
    m.scale_ = std::move(scale);
    m.offset_ = std::move(offset);
    return m;
  }

  static DeterministicMap logistic(double r) {
    if (!(r >= 0.0 && r <= 4.0))
      throw ValidationError("logistic: r must lie in [0,4] so [0,1] maps into itself");
    DeterministicMap m(MapKind::logistic, 1);
    m.r_ = r;
    return m;
  }

  // Stages applied in the listed order: x -> stages.back()(... stages[0](x)).
  static DeterministicMap composition(std::vector<DeterministicMap> stages) {
    if (stages.empty()) throw ValidationError("composition: needs at least one stage");
    const std::size_t dim = stages.front().dimension();
    for (const auto& s : stages)
      if (s.dimension() != dim) throw ValidationError("composition: stage dimensions differ");
    DeterministicMap m(MapKind::composition, dim);
    m.stages_ = std::make_shared<const std::vector<DeterministicMap>>(std::move(stages));
    return m;
  }

  MapKind kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }
  double rotation_angle() const { return alpha_; }
  double logistic_rate() const { return r_; }
  const std::vector<double>& scale() const { return scale_; }
  const std::vector<double>& offset() const { return offset_; }
  const std::vector<DeterministicMap>& stages() const { return *stages_; }

  State apply(const State& x) const {
    check_domain(x);
    switch (kind_) {
      case MapKind::circle_rotation:
        return {wrap_unit(wrap_unit(x[0]) + alpha_)};
      case MapKind::doubling:
        return {wrap_unit(2.0 * wrap_unit(x[0]))};
      case MapKind::affine_contraction: {
        State y(dim_);
        for (std::size_t i = 0; i < dim_; ++i) y[i] = scale_[i] * x[i] + offset_[i];
        return y;
      }
      case MapKind::logistic:
        return {r_ * x[0] * (1.0 - x[0])};
      case MapKind::composition: {
        State y = x;
        for (const auto& s : *stages_) y = s.apply(y);
        return y;
      }
    }
    throw NumericalError("apply: unreachable map kind");
  }

  friend bool operator==(const DeterministicMap& a, const DeterministicMap& b) {
    if (a.kind_ != b.kind_ || a.dim_ != b.dim_) return false;
    switch (a.kind_) {
      case MapKind::circle_rotation: return a.alpha_ == b.alpha_;
      case MapKind::doubling: return true;
      case MapKind::affine_contraction: return a.scale_ == b.scale_ && a.offset_ == b.offset_;
      case MapKind::logistic: return a.r_ == b.r_;
      case MapKind::composition: return *a.stages_ == *b.stages_;
    }
    return false;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind_) {
      case MapKind::circle_rotation: os << "circle-rotation(alpha=" << alpha_ << ")"; break;
      case MapKind::doubling: os << "doubling"; break;
      case MapKind::affine_contraction: os << "affine-contraction(d=" << dim_ << ")"; break;
      case MapKind::logistic: os << "logistic(r=" << r_ << ")"; break;
      case MapKind::composition: {
        os << "composition[";
        for (std::size_t i = 0; i < stages_->size(); ++i)
          os << (i ? " -> " : "") << (*stages_)[i].describe();
        os << "]";
        break;
      }
    }
    return os.str();
  }

 private:
  DeterministicMap(MapKind k, std::size_t dim) : kind_(k), dim_(dim) {}

  void check_domain(const State& x) const {
    if (x.size() != dim_)
      throw DomainError("apply: state has dimension " + std::to_string(x.size()) +
                        ", map expects " + std::to_string(dim_));
    for (double c : x)
      if (!is_finite(c)) throw DomainError("apply: non-finite state " + format_state(x));
    if (kind_ == MapKind::logistic && !(x[0] >= 0.0 && x[0] <= 1.0))
      throw DomainError("apply: logistic map requires x in [0,1], got " + format_state(x));
  }

  MapKind kind_;
  std::size_t dim_;
  double alpha_ = 0.0;
  double r_ = 0.0;
  std::vector<double> scale_, offset_;
  std::shared_ptr<const std::vector<DeterministicMap>> stages_;
};

// Row-stochastic transition matrix on m >= 2 states.
class MarkovChain {
 public:
  static MarkovChain from_matrix(Eigen::MatrixXd transition) {
    if (transition.rows() != transition.cols())
      throw ValidationError("markov: transition matrix must be square");
    if (transition.rows() < 2) throw ValidationError("markov: needs at least 2 states");
    for (Eigen::Index i = 0; i < transition.rows(); ++i) {
      double row_sum = 0.0;
      for (Eigen::Index j = 0; j < transition.cols(); ++j) {
        const double p = transition(i, j);
        if (!is_finite(p) || p < 0.0)
          throw ValidationError("markov: entry (" + std::to_string(i) + "," + std::to_string(j) +
                                ") is not a probability");
        row_sum += p;
      }
      if (std::abs(row_sum - 1.0) > 1e-12)
        throw ValidationError("markov: row " + std::to_string(i) + " sums to " +
                              std::to_string(row_sum) + ", expected 1");
    }
    return MarkovChain(std::move(transition));
  }

  // Plain-text format: one row per line, whitespace-separated probabilities.
  static MarkovChain from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("markov: cannot open matrix file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::vector<double> row;
      double v;
      while (ls >> v) row.push_back(v);
      if (!ls.eof() && ls.fail())
        throw ValidationError("markov: non-numeric token in '" + path + "' line " +
                              std::to_string(rows.size() + 1));
      if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("markov: matrix file '" + path + "' is empty");
    const std::size_t m = rows.size();
    Eigen::MatrixXd P(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      if (rows[i].size() != m)
        throw ValidationError("markov: row " + std::to_string(i) + " in '" + path + "' has " +
                              std::to_string(rows[i].size()) + " entries, expected " +
                              std::to_string(m));
      for (std::size_t j = 0; j < m; ++j) P(i, j) = rows[i][j];
    }
    return from_matrix(std::move(P));
  }

  const Eigen::MatrixXd& transition_matrix() const { return transition_; }
  std::size_t state_count() const { return static_cast<std::size_t>(transition_.rows()); }

 private:
  explicit MarkovChain(Eigen::MatrixXd transition) : transition_(std::move(transition)) {}
  Eigen::MatrixXd transition_;
};

// The stochastic Koopman operator of a finite chain acts on function values
// by v -> Pv, so its matrix in the state-value basis is the transition matrix
// itself.
inline Eigen::MatrixXcd markov_koopman_matrix(const MarkovChain& chain) {
  return chain.transition_matrix().cast<Complex>();
}

}  // namespace koop
