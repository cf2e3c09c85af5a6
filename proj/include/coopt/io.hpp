#pragma once

// Problem files. Both formats are JSON objects and any key not listed
// below is rejected.
//
// Discrete:
//   { "variables": [ {"name": "a", "values": [0, 1]}, ... ],
//     "unary":     [ [e_0(0), e_0(1)], ... ],
//     "pairwise":  [ {"i": 0, "j": 1, "table": [[...], ...]}, ... ] }     (optional)
//
// Continuous:
//   { "particles": [ {"name": "p", "mass": 1.0, "sigma2": 1.0,
//                     "potential": {"type": "harmonic", "m": 1, "omega": 1, "center": 0},
//                     "initial": {"type": "gaussian", "center": 0, "width": 1}}, ... ],
//     "pairwise":  [ {"i": 0, "j": 1, "potential": {"type": "pair_harmonic", "k": 1}}, ... ] }
//
// See docs/formats.md for the full description.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coopt/continuous_problem.hpp"
#include "coopt/continuous_solver.hpp"
#include "coopt/energy_model.hpp"
#include "coopt/errors.hpp"

namespace coopt::io {

using Json = nlohmann::json;

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(source + ": " + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path);
}

namespace detail {

inline void only_keys(const Json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw InputError(where + ": unknown field '" + key + "'");
  }
}

inline const Json& require(const Json& obj, const std::string& where, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + ": missing field '" + key + "'");
  return *it;
}

inline double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + ": expected a number");
  return v.get<double>();
}

inline double number_or(const Json& obj, const std::string& where, const std::string& key, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, where + "." + key);
}

inline std::size_t index(const Json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InputError(where + ": expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

inline std::vector<double> number_row(const Json& v, const std::string& where) {
  if (!v.is_array()) throw InputError(where + ": expected an array of numbers");
  std::vector<double> row;
  for (std::size_t k = 0; k < v.size(); ++k) row.push_back(number(v[k], where + "[" + std::to_string(k) + "]"));
  return row;
}

inline const Json& array_field(const Json& obj, const std::string& where, const std::string& key) {
  const Json& v = require(obj, where, key);
  if (!v.is_array()) throw InputError(where + "." + key + ": expected an array");
  return v;
}

}  // namespace detail

inline EnergyModel parse_discrete_problem(const Json& doc) {
  using namespace detail;
  only_keys(doc, "problem", {"variables", "unary", "pairwise"});

  const Json& vars = array_field(doc, "problem", "variables");
  std::vector<DiscreteDomain> domains;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "]";
    only_keys(vars[i], where, {"name", "values"});
    if (!require(vars[i], where, "name").is_string()) throw InputError(where + ".name: expected a string");
    const Json& values = array_field(vars[i], where, "values");
    DiscreteDomain d;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const Json& v = values[k];
      if (v.is_string()) {
        d.labels.push_back(v.get<std::string>());
      } else if (v.is_number()) {
        d.labels.push_back(v.dump());
      } else {
        throw InputError(where + ".values[" + std::to_string(k) + "]: expected a string or number");
      }
    }
    domains.push_back(std::move(d));
  }

  const Json& unary_json = array_field(doc, "problem", "unary");
  std::vector<std::vector<double>> unary;
  for (std::size_t i = 0; i < unary_json.size(); ++i) {
    unary.push_back(number_row(unary_json[i], "unary[" + std::to_string(i) + "]"));
  }

  std::vector<PairwiseTerm> pairs;
  if (doc.contains("pairwise")) {
    const Json& pj = array_field(doc, "problem", "pairwise");
    for (std::size_t p = 0; p < pj.size(); ++p) {
      const std::string where = "pairwise[" + std::to_string(p) + "]";
      only_keys(pj[p], where, {"i", "j", "table"});
      PairwiseTerm term;
      term.i = index(require(pj[p], where, "i"), where + ".i");
      term.j = index(require(pj[p], where, "j"), where + ".j");
      const Json& table = array_field(pj[p], where, "table");
      std::vector<std::vector<double>> rows;
      for (std::size_t r = 0; r < table.size(); ++r) {
        rows.push_back(number_row(table[r], where + ".table[" + std::to_string(r) + "]"));
      }
      try {
        term.table = PairTable::from_rows(rows);
      } catch (const InputError& e) {
        throw InputError(where + ": " + e.what());
      }
      pairs.push_back(std::move(term));
    }
  }
  return build_model(std::move(domains), std::move(unary), std::move(pairs));
}

inline EnergyModel load_discrete_problem(const std::string& path) {
  const Json doc = read_json_file(path);
  try {
    return parse_discrete_problem(doc);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct InitialSpec {
  enum class Kind { uniform, gaussian, delta } kind = Kind::uniform;
  double center = 0.0;
  double width = 1.0;
};

struct ContinuousInput {
  ContinuousProblem problem;
  std::vector<InitialSpec> initial;
};

namespace detail {

inline UnaryPotential parse_unary_potential(const Json& v, const std::string& where) {
  if (!v.is_object()) throw InputError(where + ": expected an object");
  const Json& type = require(v, where, "type");
  if (!type.is_string()) throw InputError(where + ".type: expected a string");
  const std::string name = type.get<std::string>();
  if (name == "harmonic") {
    only_keys(v, where, {"type", "m", "omega", "center"});
    return potentials::harmonic(number_or(v, where, "m", 1.0), number_or(v, where, "omega", 1.0),
                                number_or(v, where, "center", 0.0));
  }
  if (name == "quartic") {
    only_keys(v, where, {"type", "k"});
    return potentials::quartic(number_or(v, where, "k", 1.0));
  }
  if (name == "box") {
    only_keys(v, where, {"type"});
    return potentials::box();
  }
  throw InputError(where + ".type: unknown potential '" + name + "' (harmonic, quartic, box)");
}

inline PairPotential parse_pair_potential(const Json& v, const std::string& where) {
  if (!v.is_object()) throw InputError(where + ": expected an object");
  const Json& type = require(v, where, "type");
  if (!type.is_string() || type.get<std::string>() != "pair_harmonic") {
    throw InputError(where + ".type: unknown pair potential (pair_harmonic)");
  }
  only_keys(v, where, {"type", "k"});
  return potentials::pair_harmonic(number_or(v, where, "k", 1.0));
}

inline InitialSpec parse_initial(const Json& v, const std::string& where) {
  if (!v.is_object()) throw InputError(where + ": expected an object");
  const Json& type = require(v, where, "type");
  const std::string name = type.is_string() ? type.get<std::string>() : "";
  InitialSpec spec;
  if (name == "uniform") {
    only_keys(v, where, {"type"});
  } else if (name == "gaussian") {
    only_keys(v, where, {"type", "center", "width"});
    spec.kind = InitialSpec::Kind::gaussian;
    spec.center = number_or(v, where, "center", 0.0);
    spec.width = number_or(v, where, "width", 1.0);
  } else if (name == "delta") {
    only_keys(v, where, {"type", "at"});
    spec.kind = InitialSpec::Kind::delta;
    spec.center = number(require(v, where, "at"), where + ".at");
  } else {
    throw InputError(where + ".type: unknown initial field (uniform, gaussian, delta)");
  }
  return spec;
}

}  // namespace detail

inline ContinuousInput parse_continuous_problem(const Json& doc, double hbar) {
  using namespace detail;
  only_keys(doc, "problem", {"particles", "pairwise"});
  ContinuousInput input;
  input.problem.hbar = hbar;
  const Json& parts = array_field(doc, "problem", "particles");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string where = "particles[" + std::to_string(i) + "]";
    only_keys(parts[i], where, {"name", "mass", "sigma2", "potential", "initial"});
    Particle p;
    if (auto it = parts[i].find("name"); it != parts[i].end()) {
      if (!it->is_string()) throw InputError(where + ".name: expected a string");
      p.name = it->get<std::string>();
    } else {
      p.name = "p" + std::to_string(i);
    }
    p.mass = number_or(parts[i], where, "mass", 1.0);
    if (parts[i].contains("sigma2")) p.sigma2 = number(parts[i]["sigma2"], where + ".sigma2");
    p.potential = parse_unary_potential(require(parts[i], where, "potential"), where + ".potential");
    input.initial.push_back(parts[i].contains("initial") ? parse_initial(parts[i]["initial"], where + ".initial")
                                                         : InitialSpec{});
    input.problem.particles.push_back(std::move(p));
  }
  if (doc.contains("pairwise")) {
    const Json& pj = array_field(doc, "problem", "pairwise");
    for (std::size_t c = 0; c < pj.size(); ++c) {
      const std::string where = "pairwise[" + std::to_string(c) + "]";
      only_keys(pj[c], where, {"i", "j", "potential"});
      PairCoupling coupling;
      coupling.i = index(require(pj[c], where, "i"), where + ".i");
      coupling.j = index(require(pj[c], where, "j"), where + ".j");
      coupling.potential = parse_pair_potential(require(pj[c], where, "potential"), where + ".potential");
      input.problem.couplings.push_back(std::move(coupling));
    }
  }
  input.problem.validate();
  return input;
}

inline ContinuousInput load_continuous_problem(const std::string& path, double hbar) {
  const Json doc = read_json_file(path);
  try {
    return parse_continuous_problem(doc, hbar);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline GridField initial_field(const std::vector<InitialSpec>& specs, const Grid1D& grid) {
  GridField field;
  for (const auto& spec : specs) {
    switch (spec.kind) {
      case InitialSpec::Kind::uniform: field.psi.push_back(std::vector<double>(grid.points, 1.0)); break;
      case InitialSpec::Kind::gaussian: field.psi.push_back(fields::gaussian(grid, spec.center, spec.width)); break;
      case InitialSpec::Kind::delta: field.psi.push_back(fields::delta(grid, spec.center)); break;
    }
  }
  normalize_field(field, grid);
  return field;
}

// "MIN:MAX:N"
inline Grid1D parse_grid_spec(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos) throw InputError("grid spec must look like MIN:MAX:N, got '" + std::string(text) + "'");
  auto parse_double = [&](std::string_view part) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw InputError("grid spec: cannot read '" + std::string(part) + "' as a number");
    }
    return v;
  };
  const double lo = parse_double(text.substr(0, first));
  const double hi = parse_double(text.substr(first + 1, second - first - 1));
  const std::string_view count = text.substr(second + 1);
  std::size_t points = 0;
  auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), points);
  if (ec != std::errc() || ptr != count.data() + count.size()) {
    throw InputError("grid spec: cannot read '" + std::string(count) + "' as a point count");
  }
  return Grid1D::make(lo, hi, points);
}

}  // namespace coopt::io
