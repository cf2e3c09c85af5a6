#pragma once

// Run reports: one JSON document per run plus CSV series.
//
// result.json layout (keys in this order):
//   kind, config, converged, iterations, outputs, diagnostics,
//   trace {columns, rows}, wall_time_s
// Everything except wall_time_s is a pure function of the inputs.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coopt/continuous_solver.hpp"
#include "coopt/discrete_solver.hpp"
#include "coopt/energy_model.hpp"
#include "coopt/errors.hpp"
#include "coopt/oracle.hpp"
#include "coopt/soft_solver.hpp"

namespace coopt {

using OrderedJson = nlohmann::ordered_json;

struct SolveReport {
  std::string kind;
  OrderedJson config = OrderedJson::object();
  bool converged = true;
  std::size_t iterations = 0;
  OrderedJson outputs = OrderedJson::object();
  OrderedJson diagnostics = OrderedJson::object();
  std::vector<std::string> trace_columns;
  std::vector<std::vector<double>> trace_rows;
  double wall_time_s = 0.0;

  friend bool operator==(const SolveReport&, const SolveReport&) = default;
};

inline OrderedJson to_json(const SolveReport& r) {
  OrderedJson j;
  j["kind"] = r.kind;
  j["config"] = r.config;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["outputs"] = r.outputs;
  j["diagnostics"] = r.diagnostics;
  j["trace"] = {{"columns", r.trace_columns}, {"rows", r.trace_rows}};
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

inline SolveReport report_from_json(const OrderedJson& j) {
  try {
    SolveReport r;
    r.kind = j.at("kind").get<std::string>();
    r.config = j.at("config");
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.outputs = j.at("outputs");
    r.diagnostics = j.at("diagnostics");
    r.trace_columns = j.at("trace").at("columns").get<std::vector<std::string>>();
    r.trace_rows = j.at("trace").at("rows").get<std::vector<std::vector<double>>>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::span<const std::string> header) : out_(path) {
    if (!out_) throw InputError("cannot write '" + path.string() + "'");
    row_strings(header);
  }

  void values(std::span<const double> cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << format_number(cells[k]);
    out_ << '\n';
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  void row_strings(std::span<const std::string> cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }

  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::size_t v) { return format_number(v); }

  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const OrderedJson& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

inline void write_trace_csv(const std::filesystem::path& path, const SolveReport& r) {
  CsvWriter csv(path, r.trace_columns);
  for (const auto& row : r.trace_rows) csv.values(row);
}

namespace report_detail {

inline OrderedJson labels_of(const EnergyModel& model, const Assignment& x) {
  OrderedJson labels = OrderedJson::array();
  for (std::size_t i = 0; i < x.size(); ++i) labels.push_back(model.domain(i).labels[x[i]]);
  return labels;
}

inline OrderedJson grid_json(const Grid1D& grid) {
  return {{"min", grid.x_min}, {"max", grid.x_max}, {"points", grid.points}};
}

}  // namespace report_detail

inline SolveReport make_discrete_report(const EnergyModel& model, const DiscreteReport& run, OrderedJson config) {
  SolveReport r;
  r.kind = "solve-discrete";
  r.config = std::move(config);
  r.converged = run.converged;
  r.iterations = run.iterations;
  const auto& cert = run.certificate;
  r.outputs["assignment"] = cert.assignment;
  r.outputs["labels"] = report_detail::labels_of(model, cert.assignment);
  r.outputs["energy"] = cert.upper_bound;
  r.outputs["tables"] = run.profile.tables;
  r.outputs["offsets"] = run.profile.offsets;
  r.diagnostics["certificate"] = {{"lower_bound", cert.lower_bound},
                                  {"upper_bound", cert.upper_bound},
                                  {"gap", cert.upper_bound - cert.lower_bound},
                                  {"certified", cert.certified},
                                  {"bound_valid", cert.bound_valid}};
  r.trace_columns = {"iter", "lower_bound", "upper_bound", "delta"};
  for (const auto& row : run.trace) {
    r.trace_rows.push_back({static_cast<double>(row.iter), row.lower_bound, row.upper_bound, row.delta});
  }
  return r;
}

inline SolveReport make_soft_report(const EnergyModel& model, const SoftReport& run, OrderedJson config) {
  SolveReport r;
  r.kind = "solve-soft";
  r.config = std::move(config);
  r.converged = run.converged;
  r.iterations = run.iterations;
  r.outputs["assignment"] = run.decision;
  r.outputs["labels"] = report_detail::labels_of(model, run.decision);
  r.outputs["energy"] = evaluate(model, run.decision);
  r.outputs["psi"] = run.state.tables;
  r.outputs["norms"] = run.state.norms;
  r.trace_columns = {"iter", "max_change"};
  for (std::size_t k = 0; k < run.trace.size(); ++k) {
    r.trace_rows.push_back({static_cast<double>(k + 1), run.trace[k]});
  }
  return r;
}

inline SolveReport make_ground_report(const ContinuousProblem& problem, const Grid1D& grid, const GroundSolution& run,
                                      OrderedJson config) {
  SolveReport r;
  r.kind = "solve-ground";
  r.config = std::move(config);
  r.converged = run.result.converged;
  r.iterations = run.result.iterations;
  OrderedJson names = OrderedJson::array();
  for (const auto& p : problem.particles) names.push_back(p.name);
  r.outputs["particles"] = names;
  r.outputs["grid"] = report_detail::grid_json(grid);
  r.outputs["energies"] = run.result.energies;
  r.outputs["residuals"] = run.result.residuals;
  r.outputs["psi"] = run.field.psi;
  r.diagnostics["residuals"] = run.result.residuals;
  r.diagnostics["final_change"] = run.result.final_change;
  double worst = 0.0;
  for (const auto& psi : run.field.psi) worst = std::max(worst, std::abs(quadrature_norm(psi, grid.spacing()) - 1.0));
  r.diagnostics["normalization_error"] = worst;
  return r;
}

inline SolveReport make_enumeration_report(const EnergyModel& model, const oracle::EnumerationResult& run,
                                           OrderedJson config) {
  SolveReport r;
  r.kind = "oracle-enumerate";
  r.config = std::move(config);
  r.iterations = run.visited;
  r.outputs["assignment"] = run.optimum;
  r.outputs["labels"] = report_detail::labels_of(model, run.optimum);
  r.outputs["energy"] = run.energy;
  r.outputs["visited"] = run.visited;
  return r;
}

inline SolveReport make_eig_report(const Grid1D& grid, const oracle::EigenResult& run, OrderedJson config) {
  SolveReport r;
  r.kind = "oracle-eig";
  r.config = std::move(config);
  r.converged = run.converged;
  r.iterations = run.iterations;
  r.outputs["particles"] = OrderedJson::array({"p0"});
  r.outputs["grid"] = report_detail::grid_json(grid);
  r.outputs["energies"] = std::vector<double>{run.eigenvalue};
  r.outputs["residuals"] = std::vector<double>{run.residual};
  r.outputs["psi"] = std::vector<std::vector<double>>{run.eigenvector};
  r.diagnostics["residual"] = run.residual;
  return r;
}

}  // namespace coopt
