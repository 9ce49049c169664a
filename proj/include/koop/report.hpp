#pragma once
// Run configuration (strict JSON), the fixed-order orchestration
// spectrum -> lattice -> weyl-seq -> markov-closure, and bit-stable report
// emission.
//
// Reports are canonical: keys sorted, floats printed with 17 significant
// digits, every field present even when empty. Re-running an identical
// configuration reproduces report.json byte for byte; per-phase wall-clock
// therefore lives in a separate timings.json sidecar, never in the report.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "koop/galerkin.hpp"

namespace koop {

using Json = nlohmann::json;

enum class StateSpace { circle, euclidean, finite };

inline StateSpace map_space(const DeterministicMap& map) {
  switch (map.kind()) {
    case MapKind::circle_rotation:
    case MapKind::doubling:
    case MapKind::logistic:
      return StateSpace::circle;
    case MapKind::affine_contraction:
      return StateSpace::euclidean;
    case MapKind::composition:
      return map_space(map.stages().front());
  }
  return StateSpace::euclidean;
}

struct DictionarySpec {
  std::string type = "none";  // fourier | monomial | indicator | none
  int order = 0;
};

struct LatticeCheckSpec {
  bool enabled = false;
  bool all_catalog = true;
  int max_order = 4;
  std::vector<std::array<int, 2>> pairs;  // explicit catalog orders
};

struct WeylSeqSpec {
  bool enabled = false;
  int order_f = 1;
  int order_g = 2;
  int k_max = 10;
  ClampMode mode = ClampMode::modulus;
};

struct RunConfig {
  std::optional<DeterministicMap> map;
  std::optional<MarkovChain> chain;
  std::optional<ProbabilityMeasure> measure;
  DictionarySpec dictionary;
  SampleMethod method = SampleMethod::grid_1d;
  std::size_t sample_count = 1024;
  std::uint64_t seed = 0;
  double membership_tol = 1e-6;
  double closure_tol = 1e-6;
  double regularization = 1e-10;
  bool spectrum_enabled = true;
  LatticeCheckSpec lattice;
  WeylSeqSpec weyl;
  bool markov_closure_enabled = false;
  Json echo;
  std::string digest;
};

namespace cfg {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw ValidationError("config: " + path + ": " + msg);
}

inline void check_keys(const Json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) { known = true; break; }
    if (!known) fail(path + "." + it.key(), "unknown field");
  }
}

inline const Json& need(const Json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required field");
  return *it;
}

inline double as_double(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline long as_integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(path, "expected an integer");
  return j.get<long>();
}

inline bool as_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

inline std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> as_double_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline DeterministicMap parse_map(const Json& sys, const std::string& path) {
  const std::string kind = as_string(need(sys, path, "kind"), path + ".kind");
  if (kind == "circle-rotation") {
    check_keys(sys, path, {"kind", "alpha"});
    return DeterministicMap::rotation(as_double(need(sys, path, "alpha"), path + ".alpha"));
  }
  if (kind == "doubling") {
    check_keys(sys, path, {"kind"});
    return DeterministicMap::doubling();
  }
  if (kind == "logistic") {
    check_keys(sys, path, {"kind", "r"});
    return DeterministicMap::logistic(as_double(need(sys, path, "r"), path + ".r"));
  }
  if (kind == "affine-contraction") {
    check_keys(sys, path, {"kind", "scale", "offset"});
    std::vector<double> offset;
    if (sys.contains("offset")) offset = as_double_vector(sys["offset"], path + ".offset");
    return DeterministicMap::affine_contraction(
        as_double_vector(need(sys, path, "scale"), path + ".scale"), std::move(offset));
  }
  if (kind == "composition") {
    check_keys(sys, path, {"kind", "stages"});
    const Json& st = need(sys, path, "stages");
    if (!st.is_array() || st.empty()) fail(path + ".stages", "expected a nonempty array");
    std::vector<DeterministicMap> stages;
    for (std::size_t i = 0; i < st.size(); ++i)
      stages.push_back(parse_map(st[i], path + ".stages[" + std::to_string(i) + "]"));
    const StateSpace space = map_space(stages.front());
    for (const auto& s : stages)
      if (map_space(s) != space) fail(path + ".stages", "stages mix circle and euclidean maps");
    return DeterministicMap::composition(std::move(stages));
  }
  fail(path + ".kind", "unknown system kind '" + kind + "'");
}

inline std::pair<int, int> line_and_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') { ++line; col = 1; }
    else ++col;
  }
  return {line, col};
}

}  // namespace cfg

// Parse and validate a configuration. Unknown fields are hard errors;
// defaults are resolved here and recorded in the echo.
inline RunConfig parse_config(const std::string& text, const std::string& digest) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto [line, col] = cfg::line_and_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ValidationError("config: parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
  }
  if (!root.is_object()) throw ValidationError("config: top level must be an object");
  cfg::check_keys(root, "$", {"system", "measure", "dictionary", "quadrature", "tolerances",
                              "analyses", "regularization"});

  RunConfig rc;
  rc.digest = digest;

  // --- system -------------------------------------------------------------
  const Json& sys = cfg::need(root, "$", "system");
  if (!sys.is_object()) cfg::fail("$.system", "expected an object");
  const std::string kind = cfg::as_string(cfg::need(sys, "$.system", "kind"), "$.system.kind");
  std::optional<std::string> matrix_file;
  if (kind == "markov") {
    cfg::check_keys(sys, "$.system", {"kind", "matrix", "matrix_file"});
    const bool inline_matrix = sys.contains("matrix");
    const bool file_matrix = sys.contains("matrix_file");
    if (inline_matrix == file_matrix)
      cfg::fail("$.system", "markov systems need exactly one of 'matrix' or 'matrix_file'");
    if (file_matrix) {
      matrix_file = cfg::as_string(sys["matrix_file"], "$.system.matrix_file");
      rc.chain = MarkovChain::from_file(*matrix_file);
    } else {
      const Json& rows = sys["matrix"];
      if (!rows.is_array() || rows.empty()) cfg::fail("$.system.matrix", "expected an array of rows");
      Eigen::MatrixXd P(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = cfg::as_double_vector(rows[i], "$.system.matrix[" + std::to_string(i) + "]");
        if (row.size() != rows.size())
          cfg::fail("$.system.matrix[" + std::to_string(i) + "]",
                    "row has " + std::to_string(row.size()) + " entries, expected " +
                        std::to_string(rows.size()));
        for (std::size_t j = 0; j < row.size(); ++j) P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
      }
      rc.chain = MarkovChain::from_matrix(std::move(P));
    }
  } else {
    rc.map = cfg::parse_map(sys, "$.system");
  }

  const bool is_markov = rc.chain.has_value();
  const StateSpace space =
      is_markov ? StateSpace::finite : map_space(*rc.map);

  // --- measure --------------------------------------------------------------
  if (root.contains("measure")) {
    const Json& meas = root["measure"];
    if (!meas.is_object()) cfg::fail("$.measure", "expected an object");
    const std::string mk = cfg::as_string(cfg::need(meas, "$.measure", "kind"), "$.measure.kind");
    if (mk == "uniform-circle") {
      cfg::check_keys(meas, "$.measure", {"kind"});
      rc.measure = ProbabilityMeasure::uniform_circle();
    } else if (mk == "uniform-box") {
      cfg::check_keys(meas, "$.measure", {"kind", "lower", "upper"});
      rc.measure = ProbabilityMeasure::uniform_box(
          cfg::as_double_vector(cfg::need(meas, "$.measure", "lower"), "$.measure.lower"),
          cfg::as_double_vector(cfg::need(meas, "$.measure", "upper"), "$.measure.upper"));
    } else if (mk == "gaussian") {
      cfg::check_keys(meas, "$.measure", {"kind", "mean", "variance"});
      rc.measure = ProbabilityMeasure::gaussian(
          cfg::as_double_vector(cfg::need(meas, "$.measure", "mean"), "$.measure.mean"),
          cfg::as_double_vector(cfg::need(meas, "$.measure", "variance"), "$.measure.variance"));
    } else if (mk == "finite-discrete") {
      cfg::check_keys(meas, "$.measure", {"kind", "weights"});
      rc.measure = ProbabilityMeasure::finite_discrete(
          cfg::as_double_vector(cfg::need(meas, "$.measure", "weights"), "$.measure.weights"));
    } else {
      cfg::fail("$.measure.kind", "unknown measure kind '" + mk + "'");
    }
  } else {
    // Defaults: normalized Lebesgue on the circle, standard Gaussian on R^d,
    // uniform weights on finite states.
    if (space == StateSpace::circle) {
      rc.measure = ProbabilityMeasure::uniform_circle();
    } else if (space == StateSpace::euclidean) {
      const std::size_t d = rc.map->dimension();
      rc.measure = ProbabilityMeasure::gaussian(std::vector<double>(d, 0.0),
                                                std::vector<double>(d, 1.0));
    } else {
      const std::size_t m = rc.chain->state_count();
      rc.measure = ProbabilityMeasure::finite_discrete(
          std::vector<double>(m, 1.0 / static_cast<double>(m)));
    }
  }

  // measure / system compatibility
  if (space == StateSpace::circle && rc.measure->kind() != MeasureKind::uniform_circle)
    cfg::fail("$.measure", "circle systems use the uniform-circle measure");
  if (space == StateSpace::euclidean &&
      (rc.measure->kind() == MeasureKind::uniform_circle ||
       rc.measure->kind() == MeasureKind::finite_discrete))
    cfg::fail("$.measure", "euclidean systems use gaussian or uniform-box measures");
  if (space == StateSpace::euclidean && rc.measure->dimension() != rc.map->dimension())
    cfg::fail("$.measure", "measure dimension does not match the system dimension");
  if (space == StateSpace::finite) {
    if (rc.measure->kind() != MeasureKind::finite_discrete)
      cfg::fail("$.measure", "markov systems use the finite-discrete measure");
    if (rc.measure->state_weights().size() != rc.chain->state_count())
      cfg::fail("$.measure.weights", "weight count does not match the chain's state count");
  }

  // --- dictionary -----------------------------------------------------------
  if (root.contains("dictionary")) {
    const Json& dict = root["dictionary"];
    if (!dict.is_object()) cfg::fail("$.dictionary", "expected an object");
    cfg::check_keys(dict, "$.dictionary", {"type", "order"});
    rc.dictionary.type = cfg::as_string(cfg::need(dict, "$.dictionary", "type"), "$.dictionary.type");
    if (dict.contains("order")) {
      rc.dictionary.order = static_cast<int>(cfg::as_integer(dict["order"], "$.dictionary.order"));
      if (rc.dictionary.order < 0) cfg::fail("$.dictionary.order", "must be >= 0");
    } else if (rc.dictionary.type != "indicator") {
      cfg::fail("$.dictionary.order", "missing required field");
    }
  } else {
    if (space == StateSpace::circle) rc.dictionary = {"fourier", 8};
    else if (space == StateSpace::euclidean) rc.dictionary = {"monomial", 6};
    else rc.dictionary = {"indicator", 0};
  }
  if (space == StateSpace::circle && rc.dictionary.type != "fourier")
    cfg::fail("$.dictionary.type", "circle systems use fourier dictionaries");
  if (space == StateSpace::euclidean) {
    if (rc.dictionary.type != "monomial")
      cfg::fail("$.dictionary.type", "euclidean systems use monomial dictionaries");
    if (rc.map->dimension() != 1)
      cfg::fail("$.system", "monomial dictionaries support 1-dimensional systems only");
  }
  if (space == StateSpace::finite && rc.dictionary.type != "indicator")
    cfg::fail("$.dictionary.type", "markov systems use the indicator dictionary");

  // --- quadrature -----------------------------------------------------------
  if (root.contains("quadrature")) {
    const Json& quad = root["quadrature"];
    if (!quad.is_object()) cfg::fail("$.quadrature", "expected an object");
    cfg::check_keys(quad, "$.quadrature", {"method", "n", "seed"});
    std::string method = "";
    if (quad.contains("method")) method = cfg::as_string(quad["method"], "$.quadrature.method");
    else method = is_markov ? "exact-discrete"
                            : (rc.measure->kind() == MeasureKind::uniform_circle ? "grid-1d"
                                                                                 : "monte-carlo");
    if (method == "grid-1d") rc.method = SampleMethod::grid_1d;
    else if (method == "monte-carlo") rc.method = SampleMethod::monte_carlo;
    else if (method == "exact-discrete") rc.method = SampleMethod::exact_discrete;
    else cfg::fail("$.quadrature.method", "unknown method '" + method + "'");
    if (quad.contains("n")) {
      const long n = cfg::as_integer(quad["n"], "$.quadrature.n");
      if (n < 1) cfg::fail("$.quadrature.n", "must be >= 1");
      rc.sample_count = static_cast<std::size_t>(n);
    } else {
      rc.sample_count = (rc.method == SampleMethod::grid_1d) ? 1024 : 100000;
    }
    if (quad.contains("seed")) {
      const long s = cfg::as_integer(quad["seed"], "$.quadrature.seed");
      if (s < 0) cfg::fail("$.quadrature.seed", "must be >= 0");
      rc.seed = static_cast<std::uint64_t>(s);
    }
  } else {
    if (is_markov) rc.method = SampleMethod::exact_discrete;
    else if (rc.measure->kind() == MeasureKind::uniform_circle) {
      rc.method = SampleMethod::grid_1d;
      rc.sample_count = 1024;
    } else {
      rc.method = SampleMethod::monte_carlo;
      rc.sample_count = 100000;
    }
  }
  if (is_markov && rc.method != SampleMethod::exact_discrete)
    cfg::fail("$.quadrature.method", "markov systems use exact-discrete quadrature");
  if (!is_markov && rc.method == SampleMethod::exact_discrete)
    cfg::fail("$.quadrature.method", "exact-discrete applies only to markov systems");

  // --- tolerances / regularization -------------------------------------------
  if (root.contains("tolerances")) {
    const Json& tol = root["tolerances"];
    if (!tol.is_object()) cfg::fail("$.tolerances", "expected an object");
    cfg::check_keys(tol, "$.tolerances", {"membership", "closure"});
    if (tol.contains("membership"))
      rc.membership_tol = cfg::as_double(tol["membership"], "$.tolerances.membership");
    if (tol.contains("closure"))
      rc.closure_tol = cfg::as_double(tol["closure"], "$.tolerances.closure");
  }
  if (!(rc.membership_tol > 0.0)) cfg::fail("$.tolerances.membership", "must be positive");
  if (!(rc.closure_tol > 0.0)) cfg::fail("$.tolerances.closure", "must be positive");
  if (root.contains("regularization")) {
    rc.regularization = cfg::as_double(root["regularization"], "$.regularization");
    if (!(rc.regularization >= 0.0)) cfg::fail("$.regularization", "must be >= 0");
  }

  // --- analyses ---------------------------------------------------------------
  rc.markov_closure_enabled = is_markov;
  if (root.contains("analyses")) {
    const Json& an = root["analyses"];
    if (!an.is_object()) cfg::fail("$.analyses", "expected an object");
    cfg::check_keys(an, "$.analyses", {"spectrum", "lattice_check", "weyl_seq", "markov_closure"});
    if (an.contains("spectrum")) rc.spectrum_enabled = cfg::as_bool(an["spectrum"], "$.analyses.spectrum");
    if (an.contains("lattice_check") && !an["lattice_check"].is_boolean()) {
      const Json& lc = an["lattice_check"];
      if (!lc.is_object()) cfg::fail("$.analyses.lattice_check", "expected an object or false");
      cfg::check_keys(lc, "$.analyses.lattice_check", {"pairs", "max_order"});
      rc.lattice.enabled = true;
      if (lc.contains("max_order")) {
        rc.lattice.max_order =
            static_cast<int>(cfg::as_integer(lc["max_order"], "$.analyses.lattice_check.max_order"));
        if (rc.lattice.max_order < 0) cfg::fail("$.analyses.lattice_check.max_order", "must be >= 0");
      }
      const Json& pairs = cfg::need(lc, "$.analyses.lattice_check", "pairs");
      if (pairs.is_string()) {
        if (pairs.get<std::string>() != "all-catalog")
          cfg::fail("$.analyses.lattice_check.pairs", "expected \"all-catalog\" or a pair list");
        rc.lattice.all_catalog = true;
      } else if (pairs.is_array()) {
        rc.lattice.all_catalog = false;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          const std::string p = "$.analyses.lattice_check.pairs[" + std::to_string(i) + "]";
          if (!pairs[i].is_array() || pairs[i].size() != 2) cfg::fail(p, "expected [order, order]");
          rc.lattice.pairs.push_back({static_cast<int>(cfg::as_integer(pairs[i][0], p + "[0]")),
                                      static_cast<int>(cfg::as_integer(pairs[i][1], p + "[1]"))});
        }
        if (rc.lattice.pairs.empty()) cfg::fail("$.analyses.lattice_check.pairs", "empty pair list");
      } else {
        cfg::fail("$.analyses.lattice_check.pairs", "expected \"all-catalog\" or a pair list");
      }
    } else if (an.contains("lattice_check") && cfg::as_bool(an["lattice_check"], "$.analyses.lattice_check")) {
      rc.lattice.enabled = true;  // `true` selects the all-catalog default
    }
    if (an.contains("weyl_seq") && !an["weyl_seq"].is_boolean()) {
      const Json& ws = an["weyl_seq"];
      if (!ws.is_object()) cfg::fail("$.analyses.weyl_seq", "expected an object or false");
      cfg::check_keys(ws, "$.analyses.weyl_seq", {"catalog_pair", "k_max", "clamp_mode"});
      rc.weyl.enabled = true;
      const Json& cp = cfg::need(ws, "$.analyses.weyl_seq", "catalog_pair");
      if (!cp.is_array() || cp.size() != 2)
        cfg::fail("$.analyses.weyl_seq.catalog_pair", "expected [order, order]");
      rc.weyl.order_f = static_cast<int>(cfg::as_integer(cp[0], "$.analyses.weyl_seq.catalog_pair[0]"));
      rc.weyl.order_g = static_cast<int>(cfg::as_integer(cp[1], "$.analyses.weyl_seq.catalog_pair[1]"));
      if (ws.contains("k_max")) {
        rc.weyl.k_max = static_cast<int>(cfg::as_integer(ws["k_max"], "$.analyses.weyl_seq.k_max"));
        if (rc.weyl.k_max < 1) cfg::fail("$.analyses.weyl_seq.k_max", "must be >= 1");
      }
      if (ws.contains("clamp_mode")) {
        const std::string mode = cfg::as_string(ws["clamp_mode"], "$.analyses.weyl_seq.clamp_mode");
        if (mode == "modulus") rc.weyl.mode = ClampMode::modulus;
        else if (mode == "componentwise") rc.weyl.mode = ClampMode::componentwise;
        else cfg::fail("$.analyses.weyl_seq.clamp_mode", "expected \"modulus\" or \"componentwise\"");
      }
    } else if (an.contains("weyl_seq") && cfg::as_bool(an["weyl_seq"], "$.analyses.weyl_seq")) {
      rc.weyl.enabled = true;
    }
    if (an.contains("markov_closure"))
      rc.markov_closure_enabled = cfg::as_bool(an["markov_closure"], "$.analyses.markov_closure");
  }

  if ((rc.lattice.enabled || rc.weyl.enabled) && is_markov)
    cfg::fail("$.analyses", "lattice_check and weyl_seq need a deterministic system");
  if ((rc.lattice.enabled || rc.weyl.enabled) && !has_eigenpair_catalog(*rc.map))
    cfg::fail("$.analyses", "lattice_check and weyl_seq need a system with an eigenpair catalog (" +
                                rc.map->describe() + " has none)");
  if (rc.markov_closure_enabled && !is_markov)
    cfg::fail("$.analyses.markov_closure", "needs a markov system");
  if (!is_markov && rc.map->kind() == MapKind::affine_contraction && rc.weyl.enabled &&
      (rc.weyl.order_f < 0 || rc.weyl.order_g < 0))
    cfg::fail("$.analyses.weyl_seq.catalog_pair", "contraction orders are >= 0");
  if (is_markov) rc.sample_count = rc.chain->state_count();

  // --- echo with resolved defaults -------------------------------------------
  Json echo;
  if (is_markov) {
    Json m;
    m["kind"] = "markov";
    Json rows = Json::array();
    const auto& P = rc.chain->transition_matrix();
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
      Json row = Json::array();
      for (Eigen::Index j = 0; j < P.cols(); ++j) row.push_back(P(i, j));
      rows.push_back(row);
    }
    m["matrix"] = rows;
    if (matrix_file) m["matrix_file"] = *matrix_file;
    echo["system"] = m;
  } else {
    echo["system"] = root["system"];
  }
  {
    Json m;
    m["kind"] = to_string(rc.measure->kind());
    switch (rc.measure->kind()) {
      case MeasureKind::uniform_box:
        m["lower"] = rc.measure->lower();
        m["upper"] = rc.measure->upper();
        break;
      case MeasureKind::gaussian:
        m["mean"] = rc.measure->mean();
        m["variance"] = rc.measure->variance();
        break;
      case MeasureKind::finite_discrete:
        m["weights"] = rc.measure->state_weights();
        break;
      case MeasureKind::uniform_circle:
        break;
    }
    echo["measure"] = m;
  }
  echo["dictionary"] = Json{{"type", rc.dictionary.type}, {"order", rc.dictionary.order}};
  echo["quadrature"] = Json{{"method", to_string(rc.method)},
                            {"n", rc.sample_count},
                            {"seed", rc.seed}};
  echo["tolerances"] = Json{{"membership", rc.membership_tol}, {"closure", rc.closure_tol}};
  echo["regularization"] = rc.regularization;
  {
    Json an;
    an["spectrum"] = rc.spectrum_enabled;
    if (rc.lattice.enabled) {
      Json lc;
      lc["max_order"] = rc.lattice.max_order;
      if (rc.lattice.all_catalog) lc["pairs"] = "all-catalog";
      else {
        Json ps = Json::array();
        for (const auto& p : rc.lattice.pairs) ps.push_back(Json::array({p[0], p[1]}));
        lc["pairs"] = ps;
      }
      an["lattice_check"] = lc;
    } else {
      an["lattice_check"] = false;
    }
    if (rc.weyl.enabled) {
      an["weyl_seq"] = Json{{"catalog_pair", Json::array({rc.weyl.order_f, rc.weyl.order_g})},
                            {"k_max", rc.weyl.k_max},
                            {"clamp_mode", rc.weyl.mode == ClampMode::modulus ? "modulus"
                                                                              : "componentwise"}};
    } else {
      an["weyl_seq"] = false;
    }
    an["markov_closure"] = rc.markov_closure_enabled;
    echo["analyses"] = an;
  }
  rc.echo = echo;
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  char digest[32];
  std::snprintf(digest, sizeof(digest), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return parse_config(text, digest);
}

// Point the run at a different seed (the CLI --seed override); keeps the echo
// consistent.
inline void override_seed(RunConfig& rc, std::uint64_t seed) {
  rc.seed = seed;
  rc.echo["quadrature"]["seed"] = seed;
}

struct PhaseTiming {
  std::string name;
  double milliseconds = 0.0;
};

struct RunReport {
  Json config_echo;
  std::string config_digest;

  bool spectrum_computed = false;
  std::string spectrum_label = "none";  // oracle-backed | inconclusive-capable | finite-exact
  EigenDecomposition spectrum;
  double gram_condition = 0.0;
  double truncation_threshold = 0.0;
  bool unit_disk_computed = false;
  UnitDiskReport unit_disk;

  bool lattice_computed = false;
  LatticeReport lattice;

  std::vector<WeylSequenceTrace> weyl_traces;

  bool markov_closure_computed = false;
  LatticeReport markov_closure;

  SampleMethod method = SampleMethod::grid_1d;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  double representative_quad_error = 0.0;
  double max_weyl_quad_error = 0.0;

  std::vector<std::string> phases_run;
  std::vector<PhaseTiming> timings;  // never serialized into the report
};

namespace detail {

template <class F>
auto timed_phase(RunReport& report, const std::string& name, F&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto done = [&] {
      const auto t1 = std::chrono::steady_clock::now();
      report.timings.push_back(
          {name, std::chrono::duration<double, std::milli>(t1 - t0).count()});
      report.phases_run.push_back(name);
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      done();
    } else {
      auto result = fn();
      done();
      return result;
    }
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(name + ": " + e.what());
  } catch (const NoCatalogError& e) {
    throw NoCatalogError(name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  }
}

}  // namespace detail

// Execute the selected analyses in the fixed order
// spectrum -> lattice -> weyl-seq -> markov-closure.
inline RunReport run(const RunConfig& rc) {
  RunReport report;
  report.config_echo = rc.echo;
  report.config_digest = rc.digest;
  report.method = rc.method;
  report.seed = rc.seed;

  const SampleSet s = detail::timed_phase(report, "sample", [&] {
    const std::size_t n = rc.sample_count;
    return sample(*rc.measure, n, rc.seed, rc.method);
  });
  report.sample_count = s.size();

  const bool is_markov = rc.chain.has_value();

  if (rc.spectrum_enabled) {
    detail::timed_phase(report, "spectrum", [&] {
      if (is_markov) {
        report.spectrum = markov_eigendecomposition(*rc.chain, s);
        report.spectrum_label = "finite-exact";
        report.gram_condition = 1.0;
        report.truncation_threshold = 0.0;
      } else {
        Dictionary dict;
        if (rc.dictionary.type == "fourier") dict = fourier_dictionary(rc.dictionary.order);
        else dict = monomial_dictionary(rc.dictionary.order);
        SpectrumResult sr = compute_spectrum(dict, *rc.map, s, rc.regularization);
        report.spectrum = std::move(sr.decomposition);
        report.gram_condition = sr.gram_condition;
        report.truncation_threshold = sr.truncation_threshold;
        report.representative_quad_error = sr.representative_quad_error;
        report.spectrum_label =
            has_eigenpair_catalog(*rc.map) ? "oracle-backed" : "inconclusive-capable";
      }
      for (const auto& p : report.spectrum.pairs)
        report.max_weyl_quad_error = std::max(report.max_weyl_quad_error, p.weyl_quad_error);
      report.unit_disk = unit_disk_check(report.spectrum.eigenvalues(), rc.membership_tol);
      report.unit_disk_computed = true;
      report.spectrum_computed = true;
    });
  }

  if (rc.lattice.enabled) {
    detail::timed_phase(report, "lattice", [&] {
      std::vector<std::array<int, 2>> pairs;
      if (rc.lattice.all_catalog) {
        std::vector<int> orders;
        if (rc.map->kind() == MapKind::circle_rotation) {
          orders.push_back(0);
          for (int n = 1; n <= rc.lattice.max_order; ++n) {
            orders.push_back(n);
            orders.push_back(-n);
          }
          for (int a : orders)
            for (int b : orders) pairs.push_back({a, b});
        } else {
          // Contraction: ordered pairs with total degree inside the catalog.
          for (int a = 0; a <= rc.lattice.max_order; ++a)
            for (int b = 0; a + b <= rc.lattice.max_order; ++b) pairs.push_back({a, b});
        }
      } else {
        pairs = rc.lattice.pairs;
      }
      for (const auto& [oa, ob] : pairs) {
        const ExactEigenpair pa = catalog_pair(*rc.map, oa);
        const ExactEigenpair pb = catalog_pair(*rc.map, ob);
        report.lattice.records.push_back(lattice_product_check(
            pa.value, pa.fn, pb.value, pb.fn, *rc.map, s, rc.closure_tol));
        const auto& rec = report.lattice.records.back();
        if (rec.quad_error > report.max_weyl_quad_error)
          report.max_weyl_quad_error = rec.quad_error;
      }
      report.lattice_computed = true;
    });
  }

  if (rc.weyl.enabled) {
    detail::timed_phase(report, "weyl-seq", [&] {
      const ExactEigenpair pf = catalog_pair(*rc.map, rc.weyl.order_f);
      const ExactEigenpair pg = catalog_pair(*rc.map, rc.weyl.order_g);
      report.weyl_traces.push_back(build_weyl_sequence(pf.fn, pg.fn, pf.value, pg.value, *rc.map,
                                                       s, rc.weyl.k_max, rc.weyl.mode,
                                                       rc.membership_tol));
      for (const auto& step : report.weyl_traces.back().steps)
        report.max_weyl_quad_error = std::max(report.max_weyl_quad_error, step.quad_error);
    });
  }

  if (rc.markov_closure_enabled) {
    detail::timed_phase(report, "markov-closure", [&] {
      std::vector<Complex> eigs;
      if (report.spectrum_computed) {
        eigs = report.spectrum.eigenvalues();
      } else {
        eigs = markov_eigendecomposition(*rc.chain, s).eigenvalues();
      }
      report.markov_closure = finite_spectrum_lattice_closure(eigs, rc.closure_tol);
      if (!report.unit_disk_computed) {
        report.unit_disk = unit_disk_check(eigs, rc.membership_tol);
        report.unit_disk_computed = true;
      }
      report.markov_closure_computed = true;
    });
  }

  return report;
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

namespace detail {

inline void write_canonical(std::ostream& os, const Json& j, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
  const std::string pad_in(2 * static_cast<std::size_t>(depth + 1), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) { os << "{}"; return; }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad_in << Json(it.key()).dump() << ": ";
        write_canonical(os, it.value(), depth + 1);
      }
      os << "\n" << pad << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) { os << "[]"; return; }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad_in;
        write_canonical(os, j[i], depth + 1);
      }
      os << "\n" << pad << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) { os << "null"; return; }
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf;
      return;
    }
    default:
      os << j.dump();
      return;
  }
}

inline Json to_json(Complex z) { return Json{{"im", z.imag()}, {"re", z.real()}}; }

inline Json to_json(const LatticeRecord& r) {
  Json j;
  j["lambda"] = to_json(r.lambda);
  j["eta"] = to_json(r.eta);
  j["product"] = to_json(r.product);
  j["residual"] = r.residual ? Json(*r.residual) : Json(nullptr);
  j["quad_error"] = r.quad_error;
  j["tolerance_used"] = r.tolerance_used;
  j["verdict"] = to_string(r.verdict);
  j["input_residual_lambda"] = r.input_residual_lambda;
  j["input_residual_eta"] = r.input_residual_eta;
  return j;
}

inline Json to_json(const LatticeReport& rep) {
  Json j;
  j["records"] = Json::array();
  for (const auto& r : rep.records) j["records"].push_back(to_json(r));
  j["violations"] = Json::array();
  for (const auto& r : rep.violations) j["violations"].push_back(to_json(r));
  j["power_tests"] = Json::array();
  for (const auto& p : rep.power_tests) {
    Json pj;
    pj["base"] = to_json(p.base);
    pj["max_power_checked"] = p.max_power_checked;
    pj["escaped"] = p.escaped;
    pj["escape_power"] = p.escape_power;
    pj["escape_value"] = to_json(p.escape_value);
    pj["escape_distance"] = p.escape_distance;
    j["power_tests"].push_back(pj);
  }
  j["all_closed"] = rep.all_closed();
  j["has_violation"] = rep.has_violation();
  return j;
}

}  // namespace detail

// The canonical report body; identical configurations reproduce it byte for
// byte (wall-clock timings are deliberately excluded).
inline Json report_to_json(const RunReport& r) {
  Json j;
  j["tool_version"] = kToolVersion;
  j["config_digest"] = r.config_digest;
  j["config"] = r.config_echo;
  j["phases_run"] = r.phases_run;

  Json spec;
  spec["computed"] = r.spectrum_computed;
  spec["label"] = r.spectrum_label;
  spec["gram_condition"] = r.gram_condition;
  spec["truncation_threshold"] = r.truncation_threshold;
  Json table = Json::array();
  for (std::size_t i = 0; i < r.spectrum.pairs.size(); ++i) {
    const auto& p = r.spectrum.pairs[i];
    Json row;
    row["index"] = i;
    row["value"] = detail::to_json(p.value);
    row["abs"] = std::abs(p.value);
    row["matrix_residual"] = p.matrix_residual;
    row["weyl_residual"] = p.weyl_residual;
    row["weyl_quad_error"] = p.weyl_quad_error;
    row["value_error"] = p.value_error;
    table.push_back(row);
  }
  spec["eigenvalues"] = table;
  Json disk;
  disk["computed"] = r.unit_disk_computed;
  disk["ok"] = r.unit_disk.ok;
  disk["max_modulus"] = r.unit_disk.max_modulus;
  disk["offenders"] = Json::array();
  for (const Complex& z : r.unit_disk.offenders) disk["offenders"].push_back(detail::to_json(z));
  spec["unit_disk"] = disk;
  j["spectrum"] = spec;

  Json lat = detail::to_json(r.lattice);
  lat["computed"] = r.lattice_computed;
  j["lattice"] = lat;

  Json traces = Json::array();
  for (const auto& t : r.weyl_traces) {
    Json tj;
    tj["lambda"] = detail::to_json(t.lambda);
    tj["eta"] = detail::to_json(t.eta);
    tj["product"] = detail::to_json(t.product);
    tj["clamp_mode"] = (t.mode == ClampMode::modulus) ? "modulus" : "componentwise";
    tj["n_k"] = t.n_k;
    Json steps = Json::array();
    for (const auto& st : t.steps) {
      Json sj;
      sj["k"] = st.k;
      sj["m"] = st.m;
      sj["product_norm"] = st.product_norm;
      sj["residual"] = st.residual;
      sj["quad_error"] = st.quad_error;
      sj["bound"] = st.bound;
      sj["bound_satisfied"] = st.bound_satisfied;
      steps.push_back(sj);
    }
    tj["steps"] = steps;
    traces.push_back(tj);
  }
  j["weyl_sequences"] = traces;

  Json mc = detail::to_json(r.markov_closure);
  mc["computed"] = r.markov_closure_computed;
  j["markov_closure"] = mc;

  j["quadrature"] = Json{{"method", to_string(r.method)},
                         {"n", r.sample_count},
                         {"seed", r.seed},
                         {"representative_error", r.representative_quad_error},
                         {"max_weyl_quad_error", r.max_weyl_quad_error}};
  return j;
}

inline std::string canonical_json_string(const Json& j) {
  std::ostringstream os;
  detail::write_canonical(os, j, 0);
  os << "\n";
  return os.str();
}

enum class ReportFormat { json, csv_bundle };

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("emit: cannot open '" + p.string() + "' for writing");
  out << content;
  if (!out) throw IoError("emit: failed writing '" + p.string() + "'");
}

}  // namespace detail

// Writes the report under out_dir and returns the file paths. The JSON format
// produces report.json; the CSV bundle produces eigenvalues.csv, lattice.csv,
// weylseq.csv. Wall-clock goes to timings.json in both cases.
inline std::vector<std::string> emit(const RunReport& r, ReportFormat format,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("emit: cannot create output directory '" + out_dir + "'");

  std::vector<std::string> written;
  if (format == ReportFormat::json) {
    const fs::path p = fs::path(out_dir) / "report.json";
    detail::write_file(p, canonical_json_string(report_to_json(r)));
    written.push_back(p.string());
  } else {
    std::ostringstream eig;
    eig << "index,lambda_re,lambda_im,lambda_abs,matrix_residual,weyl_residual\n";
    for (std::size_t i = 0; i < r.spectrum.pairs.size(); ++i) {
      const auto& p = r.spectrum.pairs[i];
      eig << i << ',' << detail::fmt17(p.value.real()) << ',' << detail::fmt17(p.value.imag())
          << ',' << detail::fmt17(std::abs(p.value)) << ',' << detail::fmt17(p.matrix_residual)
          << ',' << detail::fmt17(p.weyl_residual) << '\n';
    }
    const fs::path pe = fs::path(out_dir) / "eigenvalues.csv";
    detail::write_file(pe, eig.str());
    written.push_back(pe.string());

    const LatticeReport& lat = r.markov_closure_computed ? r.markov_closure : r.lattice;
    std::ostringstream lcsv;
    lcsv << "index,lambda_re,lambda_im,eta_re,eta_im,product_re,product_im,residual,tolerance,"
            "verdict\n";
    for (std::size_t i = 0; i < lat.records.size(); ++i) {
      const auto& rec = lat.records[i];
      lcsv << i << ',' << detail::fmt17(rec.lambda.real()) << ',' << detail::fmt17(rec.lambda.imag())
           << ',' << detail::fmt17(rec.eta.real()) << ',' << detail::fmt17(rec.eta.imag()) << ','
           << detail::fmt17(rec.product.real()) << ',' << detail::fmt17(rec.product.imag()) << ','
           << (rec.residual ? detail::fmt17(*rec.residual) : std::string{}) << ','
           << detail::fmt17(rec.tolerance_used) << ',' << to_string(rec.verdict) << '\n';
    }
    const fs::path pl = fs::path(out_dir) / "lattice.csv";
    detail::write_file(pl, lcsv.str());
    written.push_back(pl.string());

    std::ostringstream wcsv;
    wcsv << "k,m,residual,bound,bound_satisfied\n";
    for (const auto& t : r.weyl_traces)
      for (const auto& st : t.steps)
        wcsv << st.k << ',' << detail::fmt17(st.m) << ',' << detail::fmt17(st.residual) << ','
             << detail::fmt17(st.bound) << ',' << (st.bound_satisfied ? 1 : 0) << '\n';
    const fs::path pw = fs::path(out_dir) / "weylseq.csv";
    detail::write_file(pw, wcsv.str());
    written.push_back(pw.string());
  }

  Json timings;
  for (const auto& t : r.timings) timings[t.name] = t.milliseconds;
  const fs::path pt = fs::path(out_dir) / "timings.json";
  detail::write_file(pt, timings.dump(2) + "\n");
  written.push_back(pt.string());
  return written;
}

}  // namespace koop
