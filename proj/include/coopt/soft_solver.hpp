#pragma once

// Soft-assignment dynamics: psi_i = exp(-Psi''_i / hbar).
//
// maxproduct_update is the exponentiated offset rule; its tables are
// rescaled so that max psi_i = 1. sumproduct_update replaces each max by a
// sum, squares the neighbour tables (alpha = 2) and rescales so that
// sum psi_i^2 = 1. Below kLogDomainHbar both updates run on log psi.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopt/energy_model.hpp"
#include "coopt/errors.hpp"
#include "coopt/parallel.hpp"

namespace coopt {

inline constexpr double kLogDomainHbar = 0.1;

struct SoftAssignment {
  std::vector<std::vector<double>> tables;
  double hbar = 1.0;
  std::size_t t = 0;
  // Z_i from the last normalization
  std::vector<double> norms;
  // log psi, filled by the log-domain updates so that tiny entries keep
  // their digits; empty after a linear-domain update
  std::vector<std::vector<double>> log_tables;

  // psi_i = value everywhere
  static SoftAssignment constant(const EnergyModel& model, double hbar, double value) {
    SoftAssignment s;
    s.hbar = hbar;
    s.tables.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) s.tables[i].assign(model.domain_size(i), value);
    s.norms.assign(model.size(), 1.0);
    return s;
  }

  // psi_i = 1 / sqrt(|domain_i|), so that sum psi_i^2 = 1
  static SoftAssignment uniform(const EnergyModel& model, double hbar) {
    SoftAssignment s = constant(model, hbar, 1.0);
    for (auto& table : s.tables) {
      const double v = 1.0 / std::sqrt(static_cast<double>(table.size()));
      for (double& p : table) p = v;
    }
    return s;
  }
};

namespace detail {

inline void check_soft(const SoftAssignment& s, const EnergyModel& model) {
  if (!(s.hbar > 0.0)) throw InputError("hbar must be positive, got " + std::to_string(s.hbar));
  if (s.tables.size() != model.size()) throw InputError("soft assignment does not match model size");
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (s.tables[i].size() != model.domain_size(i)) {
      throw InputError("soft table " + std::to_string(i) + " does not match its domain");
    }
    bool positive = false;
    for (double v : s.tables[i]) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InputError("soft table " + std::to_string(i) + " has a negative or non-finite entry");
      }
      positive = positive || v > 0.0;
    }
    if (!s.log_tables.empty()) {
      if (s.log_tables.size() != s.tables.size() || s.log_tables[i].size() != s.tables[i].size()) {
        throw InputError("log tables do not match soft tables");
      }
      for (double v : s.log_tables[i]) positive = positive || std::isfinite(v);
    }
    if (!positive) throw NumericalError("soft table " + std::to_string(i) + " is all zero");
  }
}

inline double log_or_neg_inf(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

inline double log_sum_exp(const std::vector<double>& terms) {
  const double top = *std::max_element(terms.begin(), terms.end());
  if (top == -std::numeric_limits<double>::infinity()) return top;
  double s = 0.0;
  for (double v : terms) s += std::exp(v - top);
  return top + std::log(s);
}

// log psi_j for every table, from the stored logs when present
inline std::vector<std::vector<double>> log_psi(const SoftAssignment& s) {
  if (!s.log_tables.empty()) return s.log_tables;
  std::vector<std::vector<double>> out(s.tables.size());
  for (std::size_t j = 0; j < s.tables.size(); ++j) {
    out[j].resize(s.tables[j].size());
    for (std::size_t b = 0; b < out[j].size(); ++b) out[j][b] = log_or_neg_inf(s.tables[j][b]);
  }
  return out;
}

}  // namespace detail

// Scales each table to sum psi^2 = 1 and records Z_i = sum psi^2 beforehand.
inline SoftAssignment normalize(SoftAssignment s) {
  s.norms.resize(s.tables.size());
  if (!s.log_tables.empty()) {
    for (std::size_t i = 0; i < s.tables.size(); ++i) {
      std::vector<double> doubled(s.log_tables[i].size());
      for (std::size_t a = 0; a < doubled.size(); ++a) doubled[a] = 2.0 * s.log_tables[i][a];
      const double log_z = detail::log_sum_exp(doubled);
      if (!std::isfinite(log_z)) throw NumericalError("cannot normalize soft table " + std::to_string(i));
      for (std::size_t a = 0; a < doubled.size(); ++a) {
        s.log_tables[i][a] -= 0.5 * log_z;
        s.tables[i][a] = std::exp(s.log_tables[i][a]);
      }
      s.norms[i] = std::exp(log_z);
    }
    return s;
  }
  for (std::size_t i = 0; i < s.tables.size(); ++i) {
    double z = 0.0;
    for (double v : s.tables[i]) z += v * v;
    if (!(z > 0.0) || !std::isfinite(z)) {
      throw NumericalError("cannot normalize soft table " + std::to_string(i) +
                           (z > 0.0 ? ": sum of squares overflowed" : ": table is all zero"));
    }
    const double scale = 1.0 / std::sqrt(z);
    for (double& v : s.tables[i]) v *= scale;
    s.norms[i] = z;
  }
  return s;
}

// psi_i <- exp(-e_i / hbar) prod_{j != i} max_xj [exp(-e_ij / hbar) psi_j^alpha],
// rescaled to max 1. Variables without a pair term contribute max psi_j^alpha.
inline SoftAssignment maxproduct_update(const SoftAssignment& s, const EnergyModel& model, double alpha) {
  detail::check_soft(s, model);
  if (!(alpha > 0.0)) throw InputError("alpha must be positive, got " + std::to_string(alpha));
  const std::size_t n = model.size();
  const double hbar = s.hbar;
  const bool log_domain = hbar < kLogDomainHbar;

  std::vector<double> peaks(n);
  for (std::size_t j = 0; j < n; ++j) peaks[j] = *std::max_element(s.tables[j].begin(), s.tables[j].end());
  std::vector<std::vector<double>> logs;
  std::vector<double> log_peaks(n);
  if (log_domain) {
    logs = detail::log_psi(s);
    for (std::size_t j = 0; j < n; ++j) log_peaks[j] = *std::max_element(logs[j].begin(), logs[j].end());
  }

  SoftAssignment next = s;
  ++next.t;
  if (log_domain) {
    next.log_tables.resize(n);
  } else {
    next.log_tables.clear();
  }
  parallel_for(n, 64, [&](std::size_t i) {
    const auto unary = model.unary(i);
    auto& out = next.tables[i];
    std::vector<bool> paired(n, false);
    for (std::size_t k : model.owned_terms(i)) paired[model.terms()[k].j] = true;

    if (log_domain) {
      for (std::size_t a = 0; a < out.size(); ++a) out[a] = -unary[a] / hbar;
      for (std::size_t k : model.owned_terms(i)) {
        const auto& term = model.terms()[k];
        const auto& lj = logs[term.j];
        for (std::size_t a = 0; a < out.size(); ++a) {
          double best = -std::numeric_limits<double>::infinity();
          for (std::size_t b = 0; b < lj.size(); ++b) {
            best = std::max(best, -term.table(a, b) / hbar + alpha * lj[b]);
          }
          out[a] += best;
        }
      }
      double detached = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && !paired[j]) detached += alpha * log_peaks[j];
      const double top = *std::max_element(out.begin(), out.end()) + detached;
      auto& log_out = next.log_tables[i];
      log_out.resize(out.size());
      for (std::size_t a = 0; a < out.size(); ++a) {
        log_out[a] = out[a] + detached - top;
        out[a] = std::exp(log_out[a]);
      }
      next.norms[i] = std::exp(top);
      return;
    }

    for (std::size_t a = 0; a < out.size(); ++a) out[a] = std::exp(-unary[a] / hbar);
    for (std::size_t k : model.owned_terms(i)) {
      const auto& term = model.terms()[k];
      const auto& pj = s.tables[term.j];
      for (std::size_t a = 0; a < out.size(); ++a) {
        double best = 0.0;
        for (std::size_t b = 0; b < pj.size(); ++b) {
          best = std::max(best, std::exp(-term.table(a, b) / hbar) * std::pow(pj[b], alpha));
        }
        out[a] *= best;
      }
    }
    double detached = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && !paired[j]) detached *= std::pow(peaks[j], alpha);
    for (double& v : out) v *= detached;
    const double top = *std::max_element(out.begin(), out.end());
    if (!(top > 0.0) || !std::isfinite(top)) {
      throw NumericalError("max-product table " + std::to_string(i) +
                           " under/overflowed; use hbar below " + std::to_string(kLogDomainHbar) +
                           " to run in the log domain");
    }
    for (double& v : out) v /= top;
    next.norms[i] = top;
  });
  return next;
}

// psi_i <- exp(-e_i / hbar) prod_{j != i} sum_xj exp(-e_ij / hbar) psi_j^2,
// then normalized to sum psi_i^2 = 1. Variables without a pair term
// contribute sum psi_j^2.
inline SoftAssignment sumproduct_update(const SoftAssignment& s, const EnergyModel& model) {
  detail::check_soft(s, model);
  const std::size_t n = model.size();
  const double hbar = s.hbar;
  const bool log_domain = hbar < kLogDomainHbar;

  std::vector<double> masses(n);
  for (std::size_t j = 0; j < n; ++j) {
    double m = 0.0;
    for (double v : s.tables[j]) m += v * v;
    masses[j] = m;
  }

  SoftAssignment next = s;
  ++next.t;
  if (log_domain) {
    const auto logs_in = detail::log_psi(s);
    next.log_tables.resize(n);
    parallel_for(n, 64, [&](std::size_t i) {
      const auto unary = model.unary(i);
      auto& out = next.tables[i];
      std::vector<bool> paired(n, false);
      std::vector<double> logs(out.size());
      for (std::size_t a = 0; a < out.size(); ++a) logs[a] = -unary[a] / hbar;
      for (std::size_t k : model.owned_terms(i)) {
        const auto& term = model.terms()[k];
        paired[term.j] = true;
        const auto& lj = logs_in[term.j];
        std::vector<double> terms(lj.size());
        for (std::size_t a = 0; a < out.size(); ++a) {
          for (std::size_t b = 0; b < lj.size(); ++b) terms[b] = -term.table(a, b) / hbar + 2.0 * lj[b];
          logs[a] += detail::log_sum_exp(terms);
        }
      }
      double detached = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && !paired[j]) detached += std::log(masses[j]);
      for (double& v : logs) v += detached;

      std::vector<double> doubled(logs.size());
      for (std::size_t a = 0; a < logs.size(); ++a) doubled[a] = 2.0 * logs[a];
      const double log_z = detail::log_sum_exp(doubled);
      if (!std::isfinite(log_z)) throw NumericalError("sum-product table " + std::to_string(i) + " is all zero");
      auto& log_out = next.log_tables[i];
      log_out.resize(out.size());
      for (std::size_t a = 0; a < out.size(); ++a) {
        log_out[a] = logs[a] - 0.5 * log_z;
        out[a] = std::exp(log_out[a]);
      }
      next.norms[i] = std::exp(log_z);
    });
    return next;
  }
  next.log_tables.clear();

  parallel_for(n, 64, [&](std::size_t i) {
    const auto unary = model.unary(i);
    auto& out = next.tables[i];
    std::vector<bool> paired(n, false);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = std::exp(-unary[a] / hbar);
    for (std::size_t k : model.owned_terms(i)) {
      const auto& term = model.terms()[k];
      paired[term.j] = true;
      const auto& pj = s.tables[term.j];
      for (std::size_t a = 0; a < out.size(); ++a) {
        double sum = 0.0;
        for (std::size_t b = 0; b < pj.size(); ++b) sum += std::exp(-term.table(a, b) / hbar) * pj[b] * pj[b];
        out[a] *= sum;
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && !paired[j])
        for (double& v : out) v *= masses[j];
  });
  return normalize(std::move(next));
}

// argmax psi_i^2, ties to the lowest label index.
inline Assignment extract_decision(const SoftAssignment& s) {
  Assignment x(s.tables.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& t = s.tables[i];
    double best = -1.0;
    for (std::size_t a = 0; a < t.size(); ++a) {
      if (t[a] * t[a] > best) {
        best = t[a] * t[a];
        x[i] = a;
      }
    }
  }
  return x;
}

enum class SoftMode { maxproduct, sumproduct };

inline std::string_view to_string(SoftMode m) {
  return m == SoftMode::maxproduct ? "maxprod" : "sumprod";
}

inline std::optional<SoftMode> parse_soft_mode(std::string_view text) {
  if (text == "maxprod") return SoftMode::maxproduct;
  if (text == "sumprod") return SoftMode::sumproduct;
  return std::nullopt;
}

struct SoftConfig {
  SoftMode mode = SoftMode::sumproduct;
  double hbar = 1.0;
  // max-product only; sum-product always squares
  double alpha = 1.0;
  double tol = 1e-10;
  std::size_t max_iters = 1000;
};

struct SoftReport {
  SoftAssignment state;
  Assignment decision;
  // max entrywise change per iteration
  std::vector<double> trace;
  bool converged = false;
  std::size_t iterations = 0;
};

// Starts from psi = 1 (max-product) or the normalized uniform table
// (sum-product) and stops after 3 consecutive changes <= tol.
inline SoftReport solve_soft(const EnergyModel& model, const SoftConfig& config) {
  if (!(config.hbar > 0.0)) throw InputError("hbar must be positive");
  if (!(config.tol >= 0.0)) throw InputError("tol must be nonnegative");
  SoftAssignment state = config.mode == SoftMode::maxproduct
                             ? SoftAssignment::constant(model, config.hbar, 1.0)
                             : SoftAssignment::uniform(model, config.hbar);
  SoftReport report;
  std::size_t calm = 0;
  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    SoftAssignment next = config.mode == SoftMode::maxproduct ? maxproduct_update(state, model, config.alpha)
                                                              : sumproduct_update(state, model);
    double change = 0.0;
    for (std::size_t i = 0; i < next.tables.size(); ++i)
      for (std::size_t a = 0; a < next.tables[i].size(); ++a)
        change = std::max(change, std::abs(next.tables[i][a] - state.tables[i][a]));
    state = std::move(next);
    report.trace.push_back(change);
    report.iterations = iter;
    calm = change <= config.tol ? calm + 1 : 0;
    if (calm >= 3) {
      report.converged = true;
      break;
    }
  }
  report.decision = extract_decision(state);
  report.state = std::move(state);
  return report;
}

}  // namespace coopt
