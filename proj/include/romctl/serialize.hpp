#pragma once

#include <string>

#include "json.hpp"

#include "romctl/dynamics.hpp"
#include "romctl/ilqr.hpp"
#include "romctl/modred.hpp"

namespace romctl {
namespace serialize {

using json = nlohmann::json;

// Formats a double as full-precision scientific notation (17 significant
// digits) so reruns diff cleanly.
std::string format_full(double value);

// {n, m, p, A, B, C, G_triplets, x0}; matrices row-major nested arrays,
// G_triplets as [row, col, value] entries.
json to_json(const dyn::QuadraticSystem& sys);
dyn::QuadraticSystem quadratic_system_from_json(const json& j);

// {controls, trajectory, cost_history, iterations}
json to_json(const ilqr::IlqrResult& result);
ilqr::IlqrResult ilqr_result_from_json(const json& j);

// {T_r, T_l, singular_values, method, r}
json to_json(const modred::ReductionBasis& basis);
modred::ReductionBasis reduction_basis_from_json(const json& j);

// One row per time step k: k, x components, then control components
// (control cells are empty on the final row).
void write_result_csv(const ilqr::IlqrResult& result, const std::string& path);

// Two columns: 1-based index, sigma_i / sigma_1.
void write_ladder_csv(const Eigen::Ref<const Eigen::VectorXd>& normalized,
                      const std::string& path);

void write_json_file(const json& j, const std::string& path);
json read_json_file(const std::string& path);

}  // namespace serialize
}  // namespace romctl
