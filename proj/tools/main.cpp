#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "romctl/experiment.hpp"

namespace {

using romctl::experiment::ExperimentConfig;

ExperimentConfig make_config(const std::string& config_path,
                             const std::vector<int>& r_override,
                             const std::string& method_override,
                             double tol_override, std::uint64_t seed,
                             bool seed_set) {
  ExperimentConfig config =
      config_path.empty() ? romctl::experiment::default_config_with_env()
                          : romctl::experiment::load_config(config_path);
  if (!r_override.empty()) config.r_list = r_override;
  if (method_override == "bt") {
    config.methods = {romctl::modred::ReductionMethod::kBt};
  } else if (method_override == "lqgbt") {
    config.methods = {romctl::modred::ReductionMethod::kLqgBt};
  } else if (method_override == "both") {
    config.methods = {romctl::modred::ReductionMethod::kBt,
                      romctl::modred::ReductionMethod::kLqgBt};
  } else if (!method_override.empty()) {
    throw romctl::ConfigInvalid("unknown method '" + method_override + "'");
  }
  if (tol_override > 0.0) config.ilqr.tol = tol_override;
  if (seed_set) config.seed = seed;
  return config;
}

int report_cells(const romctl::experiment::ExperimentManifest& manifest) {
  int failed = 0;
  for (const auto& rec : manifest.records) {
    if (rec.ok) {
      std::cout << rec.method << " r=" << rec.r << "  J_rom=" << rec.rom_cost
                << "  J_fom=" << rec.fom_cost << "  iters=" << rec.iterations
                << "  wall_s=" << rec.wall_s << "\n";
    } else {
      ++failed;
      std::cout << rec.method << " r=" << rec.r << "  FAILED: " << rec.error
                << "\n";
    }
  }
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order-model ILQR control experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::string method = "both";
  std::vector<int> r_list;
  double tol = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("--config", config_path, "Experiment config (.json or .toml)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--tol", tol, "ILQR convergence tolerance override");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Reduce, solve and evaluate over a dimension sweep");
  sweep->add_option("--method", method, "bt, lqgbt or both");
  sweep->add_option("--r", r_list, "Reduced dimensions")->delimiter(',');

  CLI::App* svreport =
      app.add_subcommand("svreport", "Singular-value ladders for both methods");

  CLI::App* trace = app.add_subcommand(
      "trace", "Cost history, control/output norms and fields for one run");
  std::string trace_method = "bt";
  int trace_r = 5;
  trace->add_option("--method", trace_method, "bt or lqgbt");
  trace->add_option("--r", trace_r, "Reduced dimension");

  CLI::App* props =
      app.add_subcommand("props", "Run the solver-behaviour validation batteries");

  CLI::App* fom_sim =
      app.add_subcommand("fom-sim", "Open-loop full-order simulation");

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config =
        make_config(config_path, r_list, method, tol, seed, seed_set);

    if (sweep->parsed()) {
      return report_cells(romctl::experiment::run_sweep(config, out_dir));
    }
    if (svreport->parsed()) {
      romctl::experiment::emit_sv_ladders(config, out_dir);
      std::cout << "wrote " << out_dir << "/sv_bt.csv and sv_lqgbt.csv\n";
      return 0;
    }
    if (trace->parsed()) {
      const auto m = trace_method == "lqgbt"
                         ? romctl::modred::ReductionMethod::kLqgBt
                         : romctl::modred::ReductionMethod::kBt;
      if (trace_method != "bt" && trace_method != "lqgbt") {
        throw romctl::ConfigInvalid("trace: --method must be bt or lqgbt");
      }
      return report_cells(
          romctl::experiment::emit_traces(config, m, trace_r, out_dir));
    }
    if (props->parsed()) {
      const auto report = romctl::experiment::validate_props(config.seed);
      std::filesystem::create_directories(out_dir);
      romctl::serialize::write_json_file(report, out_dir + "/props.json");
      std::cout << report.dump(2) << "\n";
      return 0;
    }
    if (fom_sim->parsed()) {
      romctl::experiment::run_fom_sim(config, out_dir);
      std::cout << "wrote open-loop field and norms to " << out_dir << "\n";
      return 0;
    }
  } catch (const romctl::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
