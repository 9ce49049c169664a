// Command-line front end: one subcommand per analysis, plus `all`.
//
//   koop spectrum      --config cfg.json [--out DIR] [--format json|csv-bundle]
//   koop lattice-check --config cfg.json ...
//   koop weyl-seq      --config cfg.json ...
//   koop markov        --config cfg.json ...
//   koop all           --config cfg.json ...
//
// Common flags: --seed overrides the configured quadrature seed,
// --dump-samples writes samples.csv next to the report.
//
// Exit codes: 0 success, 1 validation error, 2 numerical phase error,
// 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "koop/report.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool dump_samples = false;
};

void add_common_options(CLI::App* sub, CliOptions& opt) {
  sub->add_option("--config", opt.config_path, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", opt.out_dir, "output directory (default: current directory)");
  sub->add_option("--format", opt.format, "report format")
      ->check(CLI::IsMember({"json", "csv-bundle"}));
  sub->add_option("--seed", opt.seed, "override the configured quadrature seed")
      ->each([&opt](const std::string&) { opt.seed_given = true; });
  sub->add_flag("--dump-samples", opt.dump_samples, "also write the sample set as samples.csv");
}

void print_summary(const koop::RunReport& report, std::ostream& os) {
  if (report.spectrum_computed) {
    os << "spectrum: " << report.spectrum.pairs.size() << " eigenvalues (" << report.spectrum_label
       << "), max |lambda| = " << report.unit_disk.max_modulus
       << (report.unit_disk.ok ? ", unit disk ok" : ", UNIT DISK VIOLATED") << "\n";
  }
  if (report.lattice_computed) {
    os << "lattice: " << report.lattice.records.size() << " product checks, "
       << (report.lattice.all_closed() ? "all closed" : "NOT all closed") << "\n";
  }
  for (const auto& trace : report.weyl_traces) {
    std::size_t satisfied = 0;
    for (const auto& st : trace.steps) satisfied += st.bound_satisfied ? 1 : 0;
    os << "weyl-seq: k = 1.." << trace.steps.size() << ", bound satisfied at " << satisfied << "/"
       << trace.steps.size() << " steps\n";
  }
  if (report.markov_closure_computed) {
    os << "markov closure: " << report.markov_closure.violations.size() << " violations among "
       << report.markov_closure.records.size() << " products"
       << (report.markov_closure.has_violation() ? " -> no lattice structure" : " -> closed")
       << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman spectra and the multiplicative lattice structure"};
  app.require_subcommand(1);

  CliOptions opt;
  CLI::App* cmd_spectrum = app.add_subcommand("spectrum", "Galerkin spectrum + unit-disk check");
  CLI::App* cmd_lattice = app.add_subcommand("lattice-check", "eigenpair product closure checks");
  CLI::App* cmd_weyl = app.add_subcommand("weyl-seq", "clamp-based Weyl-sequence sweep");
  CLI::App* cmd_markov = app.add_subcommand("markov", "finite-spectrum closure for Markov chains");
  CLI::App* cmd_all = app.add_subcommand("all", "every analysis selected by the configuration");
  for (CLI::App* sub : {cmd_spectrum, cmd_lattice, cmd_weyl, cmd_markov, cmd_all})
    add_common_options(sub, opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    koop::RunConfig config = koop::load_config(opt.config_path);
    if (opt.seed_given) koop::override_seed(config, opt.seed);

    if (cmd_spectrum->parsed()) {
      config.spectrum_enabled = true;
      config.lattice.enabled = false;
      config.weyl.enabled = false;
      config.markov_closure_enabled = false;
    } else if (cmd_lattice->parsed()) {
      if (!config.chain && !config.lattice.enabled) config.lattice.enabled = true;
      if (config.chain)
        throw koop::ValidationError("lattice-check: markov systems have no eigenpair catalog; "
                                    "use the markov subcommand");
      if (!koop::has_eigenpair_catalog(*config.map))
        throw koop::ValidationError("lattice-check: " + config.map->describe() +
                                    " has no eigenpair catalog");
      config.spectrum_enabled = false;
      config.weyl.enabled = false;
      config.markov_closure_enabled = false;
    } else if (cmd_weyl->parsed()) {
      if (config.chain)
        throw koop::ValidationError("weyl-seq: needs a deterministic system");
      if (!koop::has_eigenpair_catalog(*config.map))
        throw koop::ValidationError("weyl-seq: " + config.map->describe() +
                                    " has no eigenpair catalog");
      if (!config.weyl.enabled) {
        config.weyl.enabled = true;
        if (config.map->kind() == koop::MapKind::affine_contraction) {
          config.weyl.order_f = 1;
          config.weyl.order_g = 1;
        }
      }
      config.spectrum_enabled = false;
      config.lattice.enabled = false;
      config.markov_closure_enabled = false;
    } else if (cmd_markov->parsed()) {
      if (!config.chain)
        throw koop::ValidationError("markov: the configured system is not a markov chain");
      config.spectrum_enabled = true;
      config.lattice.enabled = false;
      config.weyl.enabled = false;
      config.markov_closure_enabled = true;
    }
    // `all` keeps the configuration's analysis selection as resolved.

    // Keep the echo in sync with the subcommand's selection.
    config.echo["analyses"]["spectrum"] = config.spectrum_enabled;
    if (!config.lattice.enabled) config.echo["analyses"]["lattice_check"] = false;
    if (!config.weyl.enabled) config.echo["analyses"]["weyl_seq"] = false;
    config.echo["analyses"]["markov_closure"] = config.markov_closure_enabled;

    const koop::RunReport report = koop::run(config);
    const auto format = opt.format == "json" ? koop::ReportFormat::json
                                             : koop::ReportFormat::csv_bundle;
    const auto files = koop::emit(report, format, opt.out_dir);

    if (opt.dump_samples) {
      const auto samples =
          koop::sample(*config.measure, config.sample_count, config.seed, config.method);
      const auto path = std::filesystem::path(opt.out_dir) / "samples.csv";
      std::ofstream out(path, std::ios::binary);
      if (!out) throw koop::IoError("cannot open '" + path.string() + "' for writing");
      koop::dump_samples_csv(samples, out);
      std::cout << "wrote " << path.string() << "\n";
    }

    print_summary(report, std::cout);
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    for (const auto& t : report.timings)
      std::cerr << "phase " << t.name << ": " << t.milliseconds << " ms\n";
    return 0;
  } catch (const koop::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const koop::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const koop::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
