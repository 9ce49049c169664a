#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "koop/report.hpp"

using namespace koop;

namespace {

RunConfig config_from_text(const std::string& text) { return parse_config(text, "fnv1a64:test"); }

const char* kMarkovConfig = R"({
  "system": {"kind": "markov", "matrix": [[0.9, 0.1], [0.5, 0.5]]},
  "analyses": {"spectrum": true, "markov_closure": true}
})";

const char* kRotationConfig = R"({
  "system": {"kind": "circle-rotation", "alpha": 0.41421356237309515},
  "dictionary": {"type": "fourier", "order": 2},
  "quadrature": {"method": "grid-1d", "n": 256, "seed": 1},
  "analyses": {
    "spectrum": true,
    "lattice_check": {"pairs": "all-catalog", "max_order": 2},
    "weyl_seq": {"catalog_pair": [1, 2], "k_max": 4}
  }
})";

}  // namespace

TEST_CASE("config: minimal rotation config resolves defaults", "[report]") {
  const auto rc = config_from_text(R"({"system": {"kind": "circle-rotation", "alpha": 0.25}})");
  REQUIRE(rc.map.has_value());
  REQUIRE(rc.measure->kind() == MeasureKind::uniform_circle);
  REQUIRE(rc.dictionary.type == "fourier");
  REQUIRE(rc.dictionary.order == 8);
  REQUIRE(rc.method == SampleMethod::grid_1d);
  REQUIRE(rc.sample_count == 1024);
  REQUIRE(rc.membership_tol == 1e-6);
  REQUIRE(rc.closure_tol == 1e-6);
  REQUIRE(rc.regularization == 1e-10);
  REQUIRE(rc.spectrum_enabled);
  REQUIRE(!rc.lattice.enabled);
  REQUIRE(!rc.markov_closure_enabled);
  // echo records the resolved defaults
  REQUIRE(rc.echo["quadrature"]["n"] == 1024);
  REQUIRE(rc.echo["tolerances"]["membership"] == 1e-6);
}

TEST_CASE("config: markov config forces exact-discrete quadrature", "[report]") {
  const auto rc = config_from_text(kMarkovConfig);
  REQUIRE(rc.chain.has_value());
  REQUIRE(rc.method == SampleMethod::exact_discrete);
  REQUIRE(rc.measure->kind() == MeasureKind::finite_discrete);
  REQUIRE(rc.markov_closure_enabled);
  REQUIRE(rc.echo["quadrature"]["method"] == "exact-discrete");

  REQUIRE_THROWS_AS(config_from_text(R"({
    "system": {"kind": "markov", "matrix": [[0.9, 0.1], [0.5, 0.5]]},
    "quadrature": {"method": "grid-1d", "n": 16}
  })"),
                    ValidationError);
}

TEST_CASE("config: stochastic row-sum breach names the row", "[report]") {
  try {
    config_from_text(R"({"system": {"kind": "markov", "matrix": [[0.9, 0.1], [0.4, 0.5]]}})");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("config: unknown fields are hard errors", "[report]") {
  try {
    config_from_text(R"({
      "system": {"kind": "circle-rotation", "alpha": 0.25},
      "tolerances": {"membership": 1e-6, "closured": 1e-6}
    })");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    REQUIRE(what.find("closured") != std::string::npos);
    REQUIRE(what.find("unknown field") != std::string::npos);
  }
}

TEST_CASE("config: parse errors carry line and column", "[report]") {
  try {
    config_from_text("{\n  \"system\": {\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("config: analysis/system mismatches are rejected", "[report]") {
  REQUIRE_THROWS_AS(config_from_text(R"({
    "system": {"kind": "doubling"},
    "analyses": {"lattice_check": {"pairs": "all-catalog"}}
  })"),
                    ValidationError);
  REQUIRE_THROWS_AS(config_from_text(R"({
    "system": {"kind": "circle-rotation", "alpha": 0.3},
    "analyses": {"markov_closure": true}
  })"),
                    ValidationError);
  REQUIRE_THROWS_AS(config_from_text(R"({
    "system": {"kind": "circle-rotation", "alpha": 0.3},
    "measure": {"kind": "gaussian", "mean": [0.0], "variance": [1.0]}
  })"),
                    ValidationError);
}

TEST_CASE("run: the two-state chain reproduces its spectrum and violation", "[report]") {
  const auto rc = config_from_text(kMarkovConfig);
  const auto report = run(rc);

  REQUIRE(report.spectrum_computed);
  REQUIRE(report.spectrum_label == "finite-exact");
  REQUIRE(report.spectrum.pairs.size() == 2);
  REQUIRE(std::abs(report.spectrum.pairs[0].value - Complex(1.0, 0.0)) < 1e-12);
  REQUIRE(std::abs(report.spectrum.pairs[1].value - Complex(0.4, 0.0)) < 1e-12);

  REQUIRE(report.markov_closure_computed);
  REQUIRE(report.markov_closure.has_violation());
  bool violation_at_016 = false;
  for (const auto& v : report.markov_closure.violations)
    if (std::abs(v.product - Complex(0.16, 0.0)) < 1e-12) violation_at_016 = true;
  REQUIRE(violation_at_016);

  REQUIRE(report.unit_disk_computed);
  REQUIRE(report.unit_disk.ok);
  REQUIRE(std::abs(report.unit_disk.max_modulus - 1.0) < 1e-12);
}

TEST_CASE("run: rotation lattice checks close on the catalog", "[report]") {
  const auto rc = config_from_text(kRotationConfig);
  const auto report = run(rc);

  REQUIRE(report.spectrum_computed);
  REQUIRE(report.spectrum_label == "oracle-backed");
  REQUIRE(report.lattice_computed);
  REQUIRE(report.lattice.records.size() == 25);  // (2*2+1)^2 ordered pairs
  REQUIRE(report.lattice.all_closed());
  REQUIRE(report.weyl_traces.size() == 1);
  REQUIRE(report.weyl_traces[0].steps.size() == 4);
  for (const auto& step : report.weyl_traces[0].steps) REQUIRE(step.bound_satisfied);
  REQUIRE(report.phases_run ==
          std::vector<std::string>{"sample", "spectrum", "lattice", "weyl-seq"});
}

TEST_CASE("run: empty analysis selection produces an echo-only report", "[report]") {
  const auto rc = config_from_text(R"({
    "system": {"kind": "circle-rotation", "alpha": 0.25},
    "analyses": {"spectrum": false}
  })");
  const auto report = run(rc);
  REQUIRE(!report.spectrum_computed);
  REQUIRE(!report.lattice_computed);
  REQUIRE(report.weyl_traces.empty());
  // every JSON section still appears
  const Json j = report_to_json(report);
  REQUIRE(j.contains("spectrum"));
  REQUIRE(j.contains("lattice"));
  REQUIRE(j.contains("weyl_sequences"));
  REQUIRE(j.contains("markov_closure"));
  REQUIRE(j["spectrum"]["computed"] == false);
  REQUIRE(j["lattice"]["records"].is_array());
}

TEST_CASE("emit: canonical json is byte-stable and floats carry 17 digits", "[report]") {
  const auto rc = config_from_text(kMarkovConfig);
  const auto report = run(rc);
  const std::string a = canonical_json_string(report_to_json(report));
  const std::string b = canonical_json_string(report_to_json(run(rc)));
  REQUIRE(a == b);
  // floats are printed to 17 significant digits: 0.9 from the config echo
  REQUIRE(a.find("0.90000000000000002") != std::string::npos);

  // keys of every object appear sorted
  const auto pos_cfg = a.find("\"config\"");
  const auto pos_dig = a.find("\"config_digest\"");
  const auto pos_lat = a.find("\"lattice\"");
  REQUIRE(pos_cfg != std::string::npos);
  REQUIRE(pos_cfg < pos_dig);
  REQUIRE(pos_dig < pos_lat);
}

TEST_CASE("emit: whole-run determinism end to end", "[report]") {
  const auto rc = config_from_text(kRotationConfig);
  const std::string a = canonical_json_string(report_to_json(run(rc)));
  const std::string b = canonical_json_string(report_to_json(run(rc)));
  REQUIRE(a == b);
}

TEST_CASE("emit: file outputs", "[report]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "koop_report_test";
  fs::remove_all(dir);

  const auto rc = config_from_text(kRotationConfig);
  const auto report = run(rc);

  SECTION("json report") {
    const auto files = emit(report, ReportFormat::json, dir.string());
    REQUIRE(fs::exists(dir / "report.json"));
    REQUIRE(fs::exists(dir / "timings.json"));
    std::ifstream in(dir / "report.json");
    std::stringstream buf;
    buf << in.rdbuf();
    REQUIRE(buf.str() == canonical_json_string(report_to_json(report)));
  }

  SECTION("csv bundle schemas") {
    emit(report, ReportFormat::csv_bundle, dir.string());
    const auto read_lines = [&](const char* name) {
      std::ifstream in(dir / name);
      std::vector<std::string> lines;
      std::string line;
      while (std::getline(in, line)) lines.push_back(line);
      return lines;
    };
    const auto eig = read_lines("eigenvalues.csv");
    REQUIRE(eig.at(0) == "index,lambda_re,lambda_im,lambda_abs,matrix_residual,weyl_residual");
    REQUIRE(eig.size() == 1 + report.spectrum.pairs.size());

    const auto lat = read_lines("lattice.csv");
    REQUIRE(lat.at(0) ==
            "index,lambda_re,lambda_im,eta_re,eta_im,product_re,product_im,residual,tolerance,"
            "verdict");
    REQUIRE(lat.size() == 1 + report.lattice.records.size());

    const auto weyl = read_lines("weylseq.csv");
    REQUIRE(weyl.at(0) == "k,m,residual,bound,bound_satisfied");
    REQUIRE(weyl.size() == 1 + 4);
  }

  SECTION("empty sections emit header-only csv files") {
    const auto rc2 = config_from_text(R"({
      "system": {"kind": "circle-rotation", "alpha": 0.25},
      "quadrature": {"method": "grid-1d", "n": 64, "seed": 0},
      "dictionary": {"type": "fourier", "order": 1},
      "analyses": {"spectrum": false}
    })");
    const auto empty_report = run(rc2);
    emit(empty_report, ReportFormat::csv_bundle, (dir / "empty").string());
    std::ifstream in(dir / "empty" / "lattice.csv");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 1);
  }

  fs::remove_all(dir);
}

TEST_CASE("config: markov matrix loads from a file reference", "[report]") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "koop_cfg_matrix.txt";
  {
    std::ofstream out(path);
    out << "0.9 0.1\n0.5 0.5\n";
  }
  const std::string cfg = std::string(R"({"system": {"kind": "markov", "matrix_file": ")") +
                          path.string() + R"("}})";
  const auto rc = config_from_text(cfg);
  REQUIRE(rc.chain->state_count() == 2);
  REQUIRE(rc.chain->transition_matrix()(0, 0) == 0.9);
  // the echo resolves the file into the matrix itself
  REQUIRE(rc.echo["system"]["matrix"][1][0] == 0.5);
  fs::remove(path);

  REQUIRE_THROWS_AS(
      config_from_text(R"({"system": {"kind": "markov", "matrix_file": "missing.txt"}})"),
      IoError);
  REQUIRE_THROWS_AS(config_from_text(R"({"system": {"kind": "markov"}})"), ValidationError);
}

TEST_CASE("seed override updates config and echo", "[report]") {
  auto rc = config_from_text(kRotationConfig);
  override_seed(rc, 99);
  REQUIRE(rc.seed == 99);
  REQUIRE(rc.echo["quadrature"]["seed"] == 99);
}

TEST_CASE("composition systems run through the spectrum phase", "[report]") {
  const auto rc = config_from_text(R"({
    "system": {"kind": "composition",
               "stages": [{"kind": "circle-rotation", "alpha": 0.2},
                          {"kind": "circle-rotation", "alpha": 0.11}]},
    "dictionary": {"type": "fourier", "order": 2},
    "quadrature": {"method": "grid-1d", "n": 128, "seed": 0}
  })");
  const auto report = run(rc);
  REQUIRE(report.spectrum_computed);
  // composed rotations rotate by the summed angle
  bool found = false;
  for (const auto& p : report.spectrum.pairs)
    if (std::abs(p.value - std::polar(1.0, kTwoPi * 0.31)) < 1e-8) found = true;
  REQUIRE(found);
}
