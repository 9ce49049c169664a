#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "koop/catalog.hpp"
#include "koop/dynamics.hpp"

using namespace koop;

TEST_CASE("map evaluation on the fundamental domain", "[dynamics]") {
  const auto rot = DeterministicMap::rotation(0.25);
  REQUIRE(std::abs(rot.apply({0.9})[0] - 0.15) < 1e-15);

  const auto dbl = DeterministicMap::doubling();
  REQUIRE(std::abs(dbl.apply({0.6})[0] - 0.2) < 1e-15);

  const auto con = DeterministicMap::affine_contraction({0.5}, {0.0});
  REQUIRE(con.apply({2.0})[0] == 1.0);
}

TEST_CASE("circle reduction maps ties at 1.0 to 0.0", "[dynamics]") {
  REQUIRE(wrap_unit(1.0) == 0.0);
  REQUIRE(wrap_unit(-0.25) == 0.75);
  const auto rot = DeterministicMap::rotation(0.5);
  REQUIRE(rot.apply({0.5})[0] == 0.0);
}

TEST_CASE("map domain checks", "[dynamics]") {
  const auto log = DeterministicMap::logistic(3.7);
  REQUIRE(std::abs(log.apply({0.5})[0] - 3.7 * 0.25) < 1e-15);
  REQUIRE_THROWS_AS(log.apply({1.5}), DomainError);
  REQUIRE_THROWS_AS(log.apply({0.5, 0.5}), DomainError);
  REQUIRE_THROWS_AS(DeterministicMap::logistic(4.5), ValidationError);
  REQUIRE_THROWS_AS(DeterministicMap::affine_contraction({1.5}, {0.0}), ValidationError);
}

TEST_CASE("composition applies stages in order and matches repeated application",
          "[dynamics][property]") {
  const auto rot = DeterministicMap::rotation(0.3141);
  const auto twice = DeterministicMap::composition({rot, rot});
  testgen::Gen gen(5);
  for (int i = 0; i < 200; ++i) {
    const State x{gen.uniform()};
    REQUIRE(twice.apply(x)[0] == rot.apply(rot.apply(x))[0]);
  }

  const auto mixed = DeterministicMap::composition({DeterministicMap::doubling(), rot});
  for (int i = 0; i < 200; ++i) {
    const State x{gen.uniform()};
    REQUIRE(mixed.apply(x)[0] == rot.apply(DeterministicMap::doubling().apply(x))[0]);
  }
}

TEST_CASE("rotation catalog", "[dynamics]") {
  const auto rot = DeterministicMap::rotation(0.25);

  const auto trivial = exact_eigenpairs(rot, 0);
  REQUIRE(trivial.size() == 1);
  REQUIRE(trivial[0].value == Complex(1.0, 0.0));
  REQUIRE(trivial[0].fn({0.77}) == Complex(1.0, 0.0));

  const auto pairs = exact_eigenpairs(rot, 1);
  REQUIRE(pairs.size() == 3);
  // alpha = 1/4 puts the first mode's eigenvalue at i
  REQUIRE(std::abs(pairs[1].value - Complex(0.0, 1.0)) < 1e-15);
  const Complex at_tenth = pairs[1].fn({0.1});
  REQUIRE(std::abs(at_tenth - std::polar(1.0, kTwoPi * 0.1)) < 1e-15);
}

TEST_CASE("contraction catalog", "[dynamics]") {
  const auto con = DeterministicMap::affine_contraction({0.5}, {0.0});
  const auto pairs = exact_eigenpairs(con, 2);
  REQUIRE(pairs.size() == 3);
  REQUIRE(pairs[0].value == Complex(1.0, 0.0));
  REQUIRE(pairs[1].value == Complex(0.5, 0.0));
  REQUIRE(pairs[2].value == Complex(0.25, 0.0));
  REQUIRE(pairs[2].fn({3.0}) == Complex(9.0, 0.0));
}

TEST_CASE("catalog eigenpairs satisfy the defining identity pointwise", "[dynamics][property]") {
  const auto rot = DeterministicMap::rotation(std::sqrt(2.0) - 1.0);
  testgen::Gen gen(99);
  for (const auto& pair : exact_eigenpairs(rot, 4)) {
    for (int i = 0; i < 250; ++i) {
      const State x{gen.uniform()};
      const Complex lhs = pair.fn(rot.apply(x));
      const Complex rhs = pair.value * pair.fn(x);
      REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(pair.fn(x))));
    }
  }
}

TEST_CASE("catalog lookups validate contraction degrees", "[dynamics]") {
  const auto con = DeterministicMap::affine_contraction({0.5}, {0.0});
  REQUIRE_THROWS_AS(catalog_pair(con, -1), ValidationError);
  REQUIRE(catalog_pair(con, 3).value == Complex(0.125, 0.0));
  const auto rot = DeterministicMap::rotation(0.3);
  REQUIRE(std::abs(catalog_pair(rot, -2).value - std::polar(1.0, -kTwoPi * 0.6)) < 1e-14);
}

TEST_CASE("catalog-free systems raise an explicit signal", "[dynamics]") {
  REQUIRE_THROWS_AS(exact_eigenpairs(DeterministicMap::doubling(), 3), NoCatalogError);
  REQUIRE_THROWS_AS(exact_eigenpairs(DeterministicMap::logistic(4.0), 3), NoCatalogError);
  // contraction with an offset has no catalog either
  const auto shifted = DeterministicMap::affine_contraction({0.5}, {0.25});
  REQUIRE(!has_eigenpair_catalog(shifted));
  REQUIRE_THROWS_AS(exact_eigenpairs(shifted, 3), NoCatalogError);
}

TEST_CASE("markov chain validation names the offending row", "[dynamics]") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.9, 0.1, 0.4, 0.5;
  try {
    MarkovChain::from_matrix(bad);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(std::string(e.what()).find("row 1") != std::string::npos);
  }

  Eigen::MatrixXd neg(2, 2);
  neg << 1.1, -0.1, 0.5, 0.5;
  REQUIRE_THROWS_AS(MarkovChain::from_matrix(neg), ValidationError);

  Eigen::MatrixXd tiny(1, 1);
  tiny << 1.0;
  REQUIRE_THROWS_AS(MarkovChain::from_matrix(tiny), ValidationError);
}

TEST_CASE("markov koopman matrix is the transition matrix", "[dynamics]") {
  Eigen::MatrixXd P(2, 2);
  P << 0.9, 0.1, 0.5, 0.5;
  const auto chain = MarkovChain::from_matrix(P);
  const Eigen::MatrixXcd K = markov_koopman_matrix(chain);
  REQUIRE(K.rows() == 2);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) REQUIRE(K(i, j) == Complex(P(i, j), 0.0));

  const auto identity = MarkovChain::from_matrix(Eigen::MatrixXd::Identity(3, 3));
  REQUIRE(markov_koopman_matrix(identity).isApprox(Eigen::MatrixXcd::Identity(3, 3)));

  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(4, 4, 0.25);
  const auto flat = MarkovChain::from_matrix(uniform);
  REQUIRE(markov_koopman_matrix(flat).rowwise().sum().isApproxToConstant(Complex(1.0, 0.0)));
}

TEST_CASE("constant vector is a markov eigenvector at eigenvalue 1", "[dynamics]") {
  Eigen::MatrixXd P(3, 3);
  P << 0.2, 0.3, 0.5, 0.1, 0.8, 0.1, 0.6, 0.2, 0.2;
  const auto chain = MarkovChain::from_matrix(P);
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(3);
  const double residual = (P.cast<Complex>() * ones - ones).norm();
  REQUIRE(residual <= 1e-12);
}

TEST_CASE("markov chain loads from a whitespace matrix file", "[dynamics]") {
  const std::string path = "markov_test_matrix.txt";
  {
    std::ofstream out(path);
    out << "0.9 0.1\n0.5   0.5\n";
  }
  const auto chain = MarkovChain::from_file(path);
  REQUIRE(chain.state_count() == 2);
  REQUIRE(chain.transition_matrix()(1, 0) == 0.5);
  std::remove(path.c_str());

  REQUIRE_THROWS_AS(MarkovChain::from_file("definitely_missing.txt"), IoError);
}
