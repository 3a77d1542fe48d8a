#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sisyphus_app/commands.hpp"

namespace app = sisyphus::app;

int main(int argc, char** argv) {
  CLI::App cli{"Semiclassical Sisyphus cooling in a 3D lin-perp-lin lattice"};
  cli.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "master seed (overrides the file)");
    sub->add_option("--workers", workers, "worker threads (overrides the file)")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory (overrides the file)");
  };

  auto* scan = cli.add_subcommand("field-scan", "tabulate adiabatic potentials on a plane");
  add_common(scan);
  auto* run = cli.add_subcommand("run", "sweep depths and detunings, then run time-of-flight thermometry");
  add_common(run);
  auto* analyze = cli.add_subcommand("analyze", "two-time temperatures from saved snapshots");
  add_common(analyze);
  std::string snapshot_dir;
  std::vector<double> tau_ms;
  analyze->add_option("--snapshots", snapshot_dir, "directory holding snapshot_*.csv files")->required();
  analyze->add_option("--tau-ms", tau_ms, "expansion times in ms (first two are used)")->delimiter(',');
  cli.add_subcommand("version", "print the version");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? app::kSuccess : app::kConfigError;
  }

  if (cli.got_subcommand("version")) {
    std::cout << "sisyphus " << app::version_string() << "\n";
    return app::kSuccess;
  }

  try {
    app::RunConfig config = config_path.empty() ? app::RunConfig{} : app::load_config(config_path);
    if (seed) config.simulation.seed = *seed;
    if (workers) config.workers = *workers;
    if (out_dir) config.output_directory = *out_dir;
    config.validate();

    if (cli.got_subcommand(scan)) return app::cmd_field_scan(config, std::cout);
    if (cli.got_subcommand(run)) return app::cmd_run(config, std::cout);
    if (cli.got_subcommand(analyze)) {
      const auto taus = analyze->count("--tau-ms") > 0 ? tau_ms : config.thermometry.tau_ms;
      return app::cmd_analyze(config, snapshot_dir, taus, std::cout);
    }
  } catch (const app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return app::kConfigError;
  } catch (const app::OutputError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return app::kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return app::kConfigError;
  }
  return app::kSuccess;
}
