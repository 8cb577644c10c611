#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "formctl/app.hpp"
#include "formctl/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Boundary feedback control of a viscoplastic bar"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (TOML subset)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_flag("--quiet", quiet, "suppress progress messages");
  };
  CLI::App* certify = app.add_subcommand("certify", "compute S*, gains and the decay certificate");
  CLI::App* simulate = app.add_subcommand("simulate", "closed-loop run; CSV time series + JSON summary");
  CLI::App* sweep = app.add_subcommand("sweep", "repeat simulate over sweep.path / sweep.values");
  CLI::App* refine = app.add_subcommand("refine", "grid refinement study of the transport scheme");
  for (CLI::App* sub : {certify, simulate, sweep, refine}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : formctl::kExitConfig;
  }

  formctl::RunConfig config;
  try {
    config = formctl::RunConfig::load(config_path);
    if (!out_dir.empty()) {
      formctl::ConfigTable table = config.resolved;
      table.set("output.dir", out_dir);
      config = formctl::RunConfig::from_table(table);
    }
  } catch (const formctl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return formctl::kExitConfig;
  }

  std::ostream* log = quiet ? nullptr : &std::cout;
  if (certify->parsed()) return formctl::cmd_certify(config, log);
  if (simulate->parsed()) return formctl::cmd_simulate(config, log);
  if (sweep->parsed()) return formctl::cmd_sweep(config, log);
  return formctl::cmd_refine(config, log);
}
