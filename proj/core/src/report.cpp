#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "scribblefill/propagate.hpp"

namespace scribblefill {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string SolverReport::to_text() const {
  std::ostringstream out;
  out << "status = " << (ok ? "ok" : "failed") << '\n';
  out << "pixels = " << pixels << '\n';
  out << "laplacian_nnz = " << nnz << '\n';
  out << "lambda = " << fmt(lambda) << '\n';
  out << "tol = " << fmt(tol) << '\n';
  for (const auto& c : classes) {
    out << "class." << static_cast<int>(c.class_id) << ".iterations = " << c.iterations << '\n';
    out << "class." << static_cast<int>(c.class_id) << ".residual = " << fmt(c.residual) << '\n';
    out << "class." << static_cast<int>(c.class_id)
        << ".converged = " << (c.converged ? "true" : "false") << '\n';
  }
  out << "max_sum_deviation = " << fmt(max_sum_deviation) << '\n';
  out << "min_alpha = " << fmt(min_alpha) << '\n';
  out << "max_alpha = " << fmt(max_alpha) << '\n';
  out << "features_seconds = " << fmt(features_seconds) << '\n';
  out << "hashing_seconds = " << fmt(hashing_seconds) << '\n';
  out << "graph_seconds = " << fmt(graph_seconds) << '\n';
  out << "solve_seconds = " << fmt(solve_seconds) << '\n';
  out << "total_seconds = " << fmt(total_seconds) << '\n';
  return out.str();
}

std::string SolverReport::to_json() const {
  nlohmann::json classes_json = nlohmann::json::array();
  for (const auto& c : classes) {
    classes_json.push_back({{"class", c.class_id},
                            {"iterations", c.iterations},
                            {"residual", c.residual},
                            {"converged", c.converged}});
  }
  nlohmann::json j = {{"status", ok ? "ok" : "failed"},
                      {"pixels", pixels},
                      {"laplacian_nnz", nnz},
                      {"lambda", lambda},
                      {"tol", tol},
                      {"classes", classes_json},
                      {"max_sum_deviation", max_sum_deviation},
                      {"min_alpha", min_alpha},
                      {"max_alpha", max_alpha},
                      {"features_seconds", features_seconds},
                      {"hashing_seconds", hashing_seconds},
                      {"graph_seconds", graph_seconds},
                      {"solve_seconds", solve_seconds},
                      {"total_seconds", total_seconds}};
  return j.dump(2);
}

}  // namespace scribblefill
