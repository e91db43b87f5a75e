#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "romctl/burgers.hpp"
#include "romctl/ilqr.hpp"
#include "romctl/modred.hpp"
#include "romctl/serialize.hpp"

namespace romctl {
namespace experiment {

using serialize::json;

struct ExperimentConfig {
  burgers::BurgersConfig burgers;
  ilqr::IlqrConfig ilqr{3e-5, 20000, true};
  std::vector<int> r_list = {2, 3, 4, 5};
  std::vector<modred::ReductionMethod> methods = {
      modred::ReductionMethod::kBt, modred::ReductionMethod::kLqgBt};
  std::uint64_t seed = 1;

  json to_json() const;
};

// Loads a .json or .toml experiment file (flat [section] key = value TOML
// subset), then applies ROMCTL_* environment overrides.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig default_config_with_env();
void apply_env_overrides(ExperimentConfig& config);

std::string method_name(modred::ReductionMethod method);

struct RunRecord {
  std::string method;
  int r = 0;
  double rom_cost = 0.0;  // J(x_r, u_r)
  double fom_cost = 0.0;  // J(x, u_r)
  int iterations = 0;
  double wall_s = 0.0;
  bool ok = false;
  std::string error;
};

struct ExperimentManifest {
  json config_snapshot;
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;
  // emitted file -> FNV-1a content hash (hex)
  std::vector<std::pair<std::string, std::string>> artifacts;

  json to_json() const;
};

// FNV-1a 64-bit over file contents, as a fixed-width hex string.
std::string fnv1a_file_hex(const std::string& path);

// One (method, r) cell of the experiment: reduce, solve, evaluate on the FOM.
struct CellResult {
  modred::ReductionBasis basis;
  ilqr::IlqrResult rom_result;
  double rom_cost = 0.0;
  double fom_cost = 0.0;
  Eigen::MatrixXd fom_trajectory;
};
CellResult run_cell(const ExperimentConfig& config,
                    modred::ReductionMethod method, int r);

// Full sweep over methods x r_list. Per-cell failures are recorded in the
// manifest without aborting. Writes sweep.csv, per-cell result JSON files and
// manifest.json under out_dir.
ExperimentManifest run_sweep(const ExperimentConfig& config,
                             const std::string& out_dir);

// Writes sv_bt.csv and sv_lqgbt.csv (index, sigma_i / sigma_1) plus a
// manifest.
ExperimentManifest emit_sv_ladders(const ExperimentConfig& config,
                                   const std::string& out_dir);

// Cost-history, control-norm and closed-loop output-norm traces for one
// (method, r), plus open-loop and controlled space-time fields.
ExperimentManifest emit_traces(const ExperimentConfig& config,
                               modred::ReductionMethod method, int r,
                               const std::string& out_dir);

// Open-loop FOM simulation: space-time field and output norm.
ExperimentManifest run_fom_sim(const ExperimentConfig& config,
                               const std::string& out_dir);

// Seconds per solver pass (linearize + backward + forward) on a fixed
// nonlinear benchmark system, minimum over repeats.
double per_pass_seconds(const dyn::ControlledSystem& sys,
                        const ilqr::QuadraticCost& cost,
                        const Eigen::Ref<const Eigen::VectorXd>& x0, int N,
                        int passes, int repeats);

// Solver-behaviour batteries: one-pass optimality on LTI systems, the
// update-front pattern on quadratic maps from rest, and per-pass runtime
// scaling in the horizon. Failures are entries in the returned report, not
// errors.
json validate_props(std::uint64_t seed);

}  // namespace experiment
}  // namespace romctl
