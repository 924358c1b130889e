// kuramoto-fluct <subcommand> --config <file> [--set key=value ...] --out <dir>
//
// Exit codes: 0 success, 2 bad configuration or arguments, 1 runtime failure.
// KFLUCT_THREADS overrides the worker count.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kfluct/harness.hpp"

namespace {

const char* describe(const std::string& sub) {
  if (sub == "stationary") return "fixed point r and stationary profiles";
  if (sub == "pde") return "nonlinear density evolution, order parameter over time";
  if (sub == "particles") return "finite-N particle runs and fitted phase drift";
  if (sub == "spectrum") return "eigenvalues of the linearized operator and the gap";
  if (sub == "jordan") return "kernel vector, generalized eigenvector and projector";
  if (sub == "spde") return "one fluctuation path at fixed asymmetry z";
  if (sub == "ensemble") return "speed variance over random disorder draws";
  if (sub == "figures") return "PDE and particle order parameter side by side";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-size fluctuations of the disordered Kuramoto model"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  bool list_keys = false;
  for (const std::string& name : kfluct::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--set", overrides, "override, key=value (repeatable)");
    sub->add_option("--out", out_dir, "output directory")->required();
  }
  app.add_flag("--keys", list_keys, "print the recognised config keys and exit");

  // --keys alone is allowed without a subcommand
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--keys") {
      for (const auto& k : kfluct::config_schema())
        std::cout << k.key << "\t" << (*k.fallback ? k.fallback : "-") << "\t" << k.help << "\n";
      return 0;
    }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  kfluct::RunConfig cfg;
  try {
    if (!config_path.empty()) kfluct::parse_config_file(cfg, config_path);
    for (const std::string& kv : overrides) kfluct::apply_override(cfg, kv);
    kfluct::validate_common(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const kfluct::ResultBundle b = kfluct::run_subcommand(sub, cfg, out_dir);
    std::cout << b.summary.dump(2) << "\n";
    for (const auto& a : b.artifacts) std::cerr << "wrote " << (b.dir / a).string() << "\n";
    return 0;
  } catch (const kfluct::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
}
