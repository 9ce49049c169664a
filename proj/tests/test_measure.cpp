#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "koop/measure.hpp"

using namespace koop;

TEST_CASE("sampling: exact-discrete enumerates the states", "[measure]") {
  const auto mu = ProbabilityMeasure::finite_discrete({0.5, 0.5});
  const auto s = sample(mu, 17, 0, SampleMethod::exact_discrete);  // n is ignored
  REQUIRE(s.size() == 2);
  REQUIRE(s.points[0][0] == 0.0);
  REQUIRE(s.points[1][0] == 1.0);
  REQUIRE(s.weights[0] == 0.5);
  REQUIRE(s.weights[1] == 0.5);
}

TEST_CASE("sampling: circle grid uses left endpoints", "[measure]") {
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 4, 0, SampleMethod::grid_1d);
  REQUIRE(s.points.size() == 4);
  REQUIRE(s.points[0][0] == 0.0);
  REQUIRE(s.points[1][0] == 0.25);
  REQUIRE(s.points[2][0] == 0.5);
  REQUIRE(s.points[3][0] == 0.75);
  for (double w : s.weights) REQUIRE(w == 0.25);
}

TEST_CASE("sampling: gaussian MC mean is CLT-close to zero", "[measure]") {
  const auto mu = ProbabilityMeasure::gaussian({0.0}, {1.0});
  // 3/sqrt(n) = 0.03 for n = 1e4; spot-check a handful of seeds at 0.05.
  for (std::uint64_t seed : {7ULL, 1ULL, 2ULL, 3ULL}) {
    const auto s = sample(mu, 10000, seed, SampleMethod::monte_carlo);
    double mean = 0.0;
    for (const auto& p : s.points) mean += p[0];
    mean /= static_cast<double>(s.size());
    INFO("seed " << seed << " mean " << mean);
    REQUIRE(std::abs(mean) < 0.05);
  }
}

TEST_CASE("sampling: identical inputs give bit-identical sets", "[measure]") {
  const auto mu = ProbabilityMeasure::gaussian({1.0, -2.0}, {0.5, 2.0});
  const auto a = sample(mu, 257, 42, SampleMethod::monte_carlo);
  const auto b = sample(mu, 257, 42, SampleMethod::monte_carlo);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a.points[i] == b.points[i]);
    REQUIRE(a.weights[i] == b.weights[i]);
  }
  // and a different seed actually changes the points
  const auto c = sample(mu, 257, 43, SampleMethod::monte_carlo);
  REQUIRE(a.points[0] != c.points[0]);
}

TEST_CASE("sampling: incompatible method/measure combinations fail", "[measure]") {
  const auto circle = ProbabilityMeasure::uniform_circle();
  REQUIRE_THROWS_AS(sample(circle, 0, 0, SampleMethod::monte_carlo), ValidationError);
  REQUIRE_THROWS_AS(sample(circle, 8, 0, SampleMethod::exact_discrete), ValidationError);
  const auto box2 = ProbabilityMeasure::uniform_box({0.0, 0.0}, {1.0, 1.0});
  REQUIRE_THROWS_AS(sample(box2, 8, 0, SampleMethod::grid_1d), ValidationError);
  const auto discrete = ProbabilityMeasure::finite_discrete({0.25, 0.75});
  REQUIRE_THROWS_AS(sample(discrete, 8, 0, SampleMethod::monte_carlo), ValidationError);
}

TEST_CASE("measure validation", "[measure]") {
  REQUIRE_THROWS_AS(ProbabilityMeasure::finite_discrete({0.5, 0.6}), ValidationError);
  REQUIRE_THROWS_AS(ProbabilityMeasure::gaussian({0.0}, {0.0}), ValidationError);
  REQUIRE_THROWS_AS(ProbabilityMeasure::uniform_box({1.0}, {0.0}), ValidationError);
}

TEST_CASE("inner product: weights sum to one", "[measure]") {
  const auto one = Observable::constant(1.0);
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 64, 0, SampleMethod::grid_1d);
  REQUIRE(inner_product(one, one, s) == Complex(1.0, 0.0));
}

TEST_CASE("inner product: roots of unity cancel on the grid", "[measure]") {
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 64, 0, SampleMethod::grid_1d);
  const auto f = Observable::fourier_mode(1);
  const auto one = Observable::constant(1.0);

  // independent oracle: direct summation of the 64th roots of unity
  Complex direct = 0.0;
  for (int j = 0; j < 64; ++j) {
    const double arg = kTwoPi * j / 64.0;
    direct += Complex(std::cos(arg), std::sin(arg)) / 64.0;
  }
  REQUIRE(std::abs(direct) < 1e-12);
  REQUIRE(std::abs(inner_product(f, one, s)) < 1e-12);
}

TEST_CASE("inner product: <x,x> matches the left-endpoint closed form", "[measure]") {
  const auto x = Observable::coordinate(0);
  double previous_error = 1.0;
  for (std::size_t n : {64u, 128u, 256u}) {
    const auto s = sample(ProbabilityMeasure::uniform_circle(), n, 0, SampleMethod::grid_1d);
    const Complex got = inner_product(x, x, s);
    // sum_{j<n} (j/n)^2 / n = (n-1)(2n-1) / (6 n^2)
    const double nd = static_cast<double>(n);
    const double closed = (nd - 1.0) * (2.0 * nd - 1.0) / (6.0 * nd * nd);
    REQUIRE(std::abs(got - Complex(closed, 0.0)) < 1e-12);
    // grid refinement drives it toward 1/3
    const double error = std::abs(got.real() - 1.0 / 3.0);
    REQUIRE(error < previous_error);
    previous_error = error;
  }
}

TEST_CASE("inner product: conjugate symmetry is exact", "[measure][property]") {
  testgen::Gen gen(2024);
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 33, 5, SampleMethod::monte_carlo);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = testgen::random_circle_observable(gen);
    const auto g = testgen::random_circle_observable(gen);
    const Complex fg = inner_product(f, g, s);
    const Complex gf = inner_product(g, f, s);
    REQUIRE(fg == std::conj(gf));
  }
}

TEST_CASE("l2 norm examples", "[measure]") {
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 128, 0, SampleMethod::grid_1d);
  REQUIRE(l2_norm(Observable::constant(1.0), s) == 1.0);
  REQUIRE(std::abs(l2_norm(Observable::fourier_mode(1), s) - 1.0) < 1e-12);

  // f(i) = i on the two-state space {1, 2} with equal weights
  const auto mu = ProbabilityMeasure::finite_discrete({0.5, 0.5});
  const auto sd = sample(mu, 0, 0, SampleMethod::exact_discrete);
  const auto f = Observable::state_values({Complex(1.0, 0.0), Complex(2.0, 0.0)});
  REQUIRE(std::abs(l2_norm(f, sd) - std::sqrt(2.5)) < 1e-15);
}

TEST_CASE("restricted norm examples", "[measure]") {
  const auto s4 = sample(ProbabilityMeasure::uniform_circle(), 4, 0, SampleMethod::grid_1d);
  const auto one = Observable::constant(1.0);
  REQUIRE(restricted_norm(one, s4, RestrictionIndicator::everything()) == 1.0);
  REQUIRE(std::abs(restricted_norm(one, s4, RestrictionIndicator::coordinate_below(0, 0.5)) -
                   std::sqrt(0.5)) < 1e-15);
  REQUIRE(restricted_norm(one, s4, RestrictionIndicator::nothing()) == 0.0);
}

TEST_CASE("restricted norm: restriction to everything equals the full norm exactly",
          "[measure][property]") {
  testgen::Gen gen(77);
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 65, 3, SampleMethod::monte_carlo);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = testgen::random_circle_observable(gen);
    REQUIRE(restricted_norm(f, s, RestrictionIndicator::everything()) == l2_norm(f, s));
  }
}

TEST_CASE("restriction monotonicity and triangle inequality", "[measure][property]") {
  testgen::Gen gen(31337);
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 100, 9, SampleMethod::monte_carlo);
  for (int trial = 0; trial < 30; ++trial) {
    const auto f = testgen::random_circle_observable(gen);
    const auto g = testgen::random_circle_observable(gen);
    const auto region = RestrictionIndicator::coordinate_below(0, gen.uniform());
    REQUIRE(restricted_norm(f, s, region) <= l2_norm(f, s) + 1e-12);
    REQUIRE(l2_norm(f + g, s) <= l2_norm(f, s) + l2_norm(g, s) + 1e-12);
  }
}

TEST_CASE("quadrature values are reproducible", "[measure]") {
  const auto mu = ProbabilityMeasure::gaussian({0.0}, {1.0});
  const auto s1 = sample(mu, 4096, 11, SampleMethod::monte_carlo);
  const auto s2 = sample(mu, 4096, 11, SampleMethod::monte_carlo);
  const auto f = Observable::monomial(3);
  REQUIRE(inner_product(f, f, s1) == inner_product(f, f, s2));
}

TEST_CASE("error estimates: MC standard error and grid refinement", "[measure]") {
  const auto mu = ProbabilityMeasure::gaussian({0.0}, {1.0});
  const auto s = sample(mu, 20000, 5, SampleMethod::monte_carlo);
  const auto x = Observable::coordinate(0);
  const auto est = l2_norm_with_error(x, s);
  REQUIRE(est.error > 0.0);
  REQUIRE(std::abs(est.value - 1.0) < 10.0 * est.error + 0.05);

  const auto sg = sample(ProbabilityMeasure::uniform_circle(), 256, 0, SampleMethod::grid_1d);
  const auto eg = l2_norm_with_error(x, sg);
  REQUIRE(std::abs(eg.value - std::sqrt(1.0 / 3.0)) < 10.0 * eg.error + 1e-3);

  const auto sd = sample(ProbabilityMeasure::finite_discrete({1.0, 0.0}), 0, 0,
                         SampleMethod::exact_discrete);
  REQUIRE(l2_norm_with_error(Observable::constant(2.0), sd).error == 0.0);
}

TEST_CASE("evaluation failures name the offending sample point", "[measure]") {
  // a two-state observable cannot be evaluated at circle points like 0.25
  const auto v = Observable::state_values({Complex(1.0, 0.0), Complex(2.0, 0.0)});
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 4, 0, SampleMethod::grid_1d);
  try {
    inner_product(v, v, s);
    FAIL("expected an evaluation error");
  } catch (const DomainError& e) {
    REQUIRE(std::string(e.what()).find("sample point 1") != std::string::npos);
  }
}

TEST_CASE("gaussian equal-mass grid integrates smooth moments", "[measure]") {
  const auto mu = ProbabilityMeasure::gaussian({0.0}, {1.0});
  const auto s = sample(mu, 4096, 0, SampleMethod::grid_1d);
  const auto x = Observable::coordinate(0);
  // E[x^2] = 1 up to the truncated-tail error of the equal-mass grid
  REQUIRE(std::abs(inner_product(x, x, s).real() - 1.0) < 0.01);
  // symmetric nodes: E[x] = 0 to rounding
  REQUIRE(std::abs(inner_product(x, Observable::constant(1.0), s)) < 1e-12);
}

TEST_CASE("box measure uses the midpoint grid", "[measure]") {
  const auto mu = ProbabilityMeasure::uniform_box({0.0}, {2.0});
  const auto s = sample(mu, 256, 0, SampleMethod::grid_1d);
  REQUIRE(s.points.front()[0] == 2.0 * (0.5 / 256.0));
  const auto x = Observable::coordinate(0);
  // (1/2) int_0^2 x^2 dx = 4/3; midpoint rule is O(n^-2)
  REQUIRE(std::abs(inner_product(x, x, s).real() - 4.0 / 3.0) < 1e-4);
}

TEST_CASE("sample CSV dump schema", "[measure]") {
  const auto s = sample(ProbabilityMeasure::uniform_circle(), 3, 0, SampleMethod::grid_1d);
  std::ostringstream os;
  dump_samples_csv(s, os);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  REQUIRE(header == "index,x0,weight");
  std::string row;
  int rows = 0;
  while (std::getline(in, row))
    if (!row.empty()) ++rows;
  REQUIRE(rows == 3);
}
