#include "romctl/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

namespace romctl {
namespace serialize {

namespace {

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      M(i, c) = j.at(i).at(c).get<double>();
    }
  }
  return M;
}

json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(i).get<double>();
  return v;
}

}  // namespace

std::string format_full(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", value);
  return buf;
}

json to_json(const dyn::QuadraticSystem& sys) {
  json trips = json::array();
  for (int c = 0; c < sys.G.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.G, c); it; ++it) {
      trips.push_back(json::array({it.row(), it.col(), it.value()}));
    }
  }
  return json{{"n", sys.n()},
              {"m", sys.m()},
              {"p", sys.p()},
              {"A", matrix_to_json(sys.A)},
              {"B", matrix_to_json(sys.B)},
              {"C", matrix_to_json(sys.C)},
              {"G_triplets", std::move(trips)},
              {"x0", vector_to_json(sys.x0)}};
}

dyn::QuadraticSystem quadratic_system_from_json(const json& j) {
  const Eigen::Index n = j.at("n").get<Eigen::Index>();
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& t : j.at("G_triplets")) {
    trips.emplace_back(t.at(0).get<Eigen::Index>(), t.at(1).get<Eigen::Index>(),
                       t.at(2).get<double>());
  }
  Eigen::SparseMatrix<double> G(n, n * n);
  G.setFromTriplets(trips.begin(), trips.end());
  return dyn::QuadraticSystem::make(
      matrix_from_json(j.at("A")), std::move(G), matrix_from_json(j.at("B")),
      matrix_from_json(j.at("C")), vector_from_json(j.at("x0")));
}

json to_json(const ilqr::IlqrResult& result) {
  return json{{"controls", matrix_to_json(result.controls)},
              {"trajectory", matrix_to_json(result.trajectory)},
              {"cost_history", result.cost_history},
              {"iterations", result.iterations}};
}

ilqr::IlqrResult ilqr_result_from_json(const json& j) {
  ilqr::IlqrResult r;
  r.controls = matrix_from_json(j.at("controls"));
  r.trajectory = matrix_from_json(j.at("trajectory"));
  r.cost_history = j.at("cost_history").get<std::vector<double>>();
  r.iterations = j.at("iterations").get<int>();
  return r;
}

json to_json(const modred::ReductionBasis& basis) {
  return json{{"T_r", matrix_to_json(basis.T_r)},
              {"T_l", matrix_to_json(basis.T_l)},
              {"singular_values", vector_to_json(basis.singular_values)},
              {"method",
               basis.method == modred::ReductionMethod::kBt ? "bt" : "lqgbt"},
              {"r", basis.r},
              {"rank_clamped", basis.rank_clamped}};
}

modred::ReductionBasis reduction_basis_from_json(const json& j) {
  modred::ReductionBasis b;
  b.T_r = matrix_from_json(j.at("T_r"));
  b.T_l = matrix_from_json(j.at("T_l"));
  b.singular_values = vector_from_json(j.at("singular_values"));
  b.method = j.at("method").get<std::string>() == "bt"
                 ? modred::ReductionMethod::kBt
                 : modred::ReductionMethod::kLqgBt;
  b.r = j.at("r").get<Eigen::Index>();
  b.rank_clamped = j.value("rank_clamped", false);
  return b;
}

void write_result_csv(const ilqr::IlqrResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "k";
  for (Eigen::Index j = 0; j < result.trajectory.cols(); ++j) out << ",x" << j;
  for (Eigen::Index j = 0; j < result.controls.cols(); ++j) out << ",u" << j;
  out << "\n";
  for (Eigen::Index k = 0; k < result.trajectory.rows(); ++k) {
    out << k;
    for (Eigen::Index j = 0; j < result.trajectory.cols(); ++j) {
      out << "," << format_full(result.trajectory(k, j));
    }
    for (Eigen::Index j = 0; j < result.controls.cols(); ++j) {
      out << ",";
      if (k < result.controls.rows()) out << format_full(result.controls(k, j));
    }
    out << "\n";
  }
}

void write_ladder_csv(const Eigen::Ref<const Eigen::VectorXd>& normalized,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << "index,normalized_sv\n";
  for (Eigen::Index i = 0; i < normalized.size(); ++i) {
    out << (i + 1) << "," << format_full(normalized(i)) << "\n";
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << j.dump(2) << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return json::parse(in);
}

}  // namespace serialize
}  // namespace romctl
