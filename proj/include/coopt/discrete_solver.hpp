#pragma once

// Hard-decision cooperative optimization over an EnergyModel.
//
// Each variable i carries a table Psi_i(x_i). With Psi(., 0) = 0, nonnegative
// energies, lambda in [0, 1) and column-stochastic weights, the sum
// sum_i Psi_i(x_i, t) stays below E(x) - shift for every x and grows
// monotonically in t. When the minimum of that sum meets the energy of the
// extracted assignment, the assignment is a certified global minimum.
//
// Four update rules are provided:
//   general   Psi_i <- min over X_i \ {x_i} of (1-l) E_i(x) + l sum_j w_ij Psi_j(x_j)
//   pairwise  the same, specialised to pairwise E_i (one min per neighbour)
//   alpha     Psi'_i <- e_i + sum_{j!=i} min_xj [e_ij + alpha Psi'_j],  Psi' = Psi / (1-l)
//   offset    alpha, followed by subtracting z_i = min Psi'_i
// Updates are synchronous: every table at t+1 reads only tables at t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coopt/energy_model.hpp"
#include "coopt/errors.hpp"
#include "coopt/parallel.hpp"

namespace coopt {

enum class Variant { general, pairwise, alpha, offset };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::general: return "general";
    case Variant::pairwise: return "pairwise";
    case Variant::alpha: return "alpha";
    case Variant::offset: return "offset";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view text) {
  for (Variant v : {Variant::general, Variant::pairwise, Variant::alpha, Variant::offset}) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

// Absolute slack for certificates and bound checks.
inline constexpr double kCertEpsilon = 1e-9;

// Square propagation matrix w_ij, stored row-major.
class WeightMatrix {
 public:
  explicit WeightMatrix(std::size_t n, double fill = 0.0) : n_(n), w_(n * n, fill) {}

  // w_ii = 0 and w_ij = 1/(n-1); a single variable keeps w_00 = 1 so the
  // column sums are one in both cases.
  static WeightMatrix uniform_off_diagonal(std::size_t n) {
    WeightMatrix w(n);
    if (n == 1) {
      w(0, 0) = 1.0;
      return w;
    }
    const double a = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) w(i, j) = a;
    return w;
  }

  double& operator()(std::size_t i, std::size_t j) { return w_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
  std::size_t size() const noexcept { return n_; }

  double column_sum(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, j);
    return s;
  }

 private:
  std::size_t n_;
  std::vector<double> w_;
};

struct CoopConfig {
  Variant variant = Variant::pairwise;
  // cooperation strength, in [0, 1)
  double lambda = 0.5;
  // defaults to WeightMatrix::uniform_off_diagonal
  std::optional<WeightMatrix> weights;
  // alpha/offset variants; defaults to lambda / (n - 1), the value implied
  // by the default weights
  std::optional<double> alpha;
  std::size_t max_iters = 1000;
  double tol = 1e-12;

  WeightMatrix weights_for(std::size_t n) const {
    return weights ? *weights : WeightMatrix::uniform_off_diagonal(n);
  }

  double alpha_for(std::size_t n) const {
    if (alpha) return *alpha;
    return n > 1 ? lambda / static_cast<double>(n - 1) : lambda;
  }
};

inline void validate(const CoopConfig& config, std::size_t n) {
  if (!(config.lambda >= 0.0 && config.lambda < 1.0)) {
    throw InputError("lambda must lie in [0, 1), got " + std::to_string(config.lambda));
  }
  if (!(config.tol >= 0.0)) throw InputError("tol must be nonnegative");
  if (config.weights) {
    const auto& w = *config.weights;
    if (w.size() != n) throw InputError("weight matrix size does not match variable count");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (!(w(i, j) >= 0.0) || !std::isfinite(w(i, j))) {
          throw InputError("weights must be finite and nonnegative");
        }
    if (config.variant == Variant::general) {
      for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(w.column_sum(j) - 1.0) > 1e-12) {
          throw InputError("column " + std::to_string(j) + " of the weight matrix does not sum to 1");
        }
      }
    }
  }
  if (config.variant == Variant::alpha || config.variant == Variant::offset) {
    const double a = config.alpha_for(n);
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InputError("alpha must be positive, got " + std::to_string(a));
    }
  }
}

struct BoundProfile {
  Variant variant = Variant::pairwise;
  // Psi_i(x_i); Psi' for alpha and Psi'' for offset
  std::vector<std::vector<double>> tables;
  // offset variant: Psi' = tables + offsets, accumulated across updates
  std::vector<double> offsets;
  std::size_t t = 0;
  // false when the profile did not start from the zero bound, in which case
  // no certificate is issued
  bool from_zero = true;

  static BoundProfile zeros(const EnergyModel& model, Variant variant) {
    BoundProfile p;
    p.variant = variant;
    p.tables.resize(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) p.tables[i].assign(model.domain_size(i), 0.0);
    p.offsets.assign(model.size(), 0.0);
    return p;
  }

  template <typename Rng>
  static BoundProfile random(const EnergyModel& model, Variant variant, Rng& rng, double upper) {
    BoundProfile p = zeros(model, variant);
    std::uniform_real_distribution<double> dist(0.0, upper);
    for (auto& table : p.tables)
      for (double& v : table) v = dist(rng);
    p.from_zero = false;
    return p;
  }
};

namespace detail {

inline void require_variant(const BoundProfile& p, Variant expected) {
  if (p.variant != expected) {
    throw InputError("profile variant is " + std::string(to_string(p.variant)) + ", update expects " +
                     std::string(to_string(expected)));
  }
}

inline double table_min(std::span<const double> t) { return *std::min_element(t.begin(), t.end()); }

inline void require_shape(const BoundProfile& p, const EnergyModel& model) {
  if (p.tables.size() != model.size()) throw InputError("profile does not match model size");
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (p.tables[i].size() != model.domain_size(i)) {
      throw InputError("profile table " + std::to_string(i) + " does not match its domain");
    }
  }
}

inline std::size_t table_work(const EnergyModel& model) {
  std::size_t work = 1;
  for (const auto& term : model.terms()) work += term.table.values().size();
  return work;
}

// Shared kernel of the pairwise and alpha rules:
//   out_i = own_scale e_i + self_weight_i Psi_i
//           + sum_{j != i} min_xj [pair_scale e_ij + neighbour_weight_ij Psi_j]
// with absent pairs contributing neighbour_weight_ij min Psi_j.
template <typename SelfWeight, typename NeighbourWeight>
std::vector<std::vector<double>> min_sum_sweep(const EnergyModel& model,
                                               const std::vector<std::vector<double>>& psi,
                                               double energy_scale, SelfWeight self_weight,
                                               NeighbourWeight neighbour_weight) {
  const std::size_t n = model.size();
  std::vector<double> mins(n);
  for (std::size_t j = 0; j < n; ++j) mins[j] = table_min(psi[j]);

  std::vector<std::vector<double>> next(n);
  parallel_for(n, table_work(model), [&](std::size_t i) {
    const auto unary = model.unary(i);
    auto& out = next[i];
    out.resize(unary.size());
    const double self = self_weight(i);
    for (std::size_t a = 0; a < unary.size(); ++a) out[a] = energy_scale * unary[a] + self * psi[i][a];

    std::vector<bool> paired(n, false);
    for (std::size_t k : model.owned_terms(i)) {
      const auto& term = model.terms()[k];
      paired[term.j] = true;
      const double w = neighbour_weight(i, term.j);
      const auto& pj = psi[term.j];
      for (std::size_t a = 0; a < out.size(); ++a) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < pj.size(); ++b) {
          best = std::min(best, energy_scale * term.table(a, b) + w * pj[b]);
        }
        out[a] += best;
      }
    }
    double detached = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && !paired[j]) detached += neighbour_weight(i, j) * mins[j];
    }
    for (double& v : out) v += detached;
  });
  return next;
}

}  // namespace detail

// The general rule, E_i treated as a black box: the minimum runs over every joint
// setting of the owner's neighbours. Variables outside X_i only appear
// through w_ij Psi_j and contribute their own minimum.
inline BoundProfile general_update(const BoundProfile& profile, std::span<const SubEnergy> parts,
                                   const CoopConfig& config) {
  detail::require_variant(profile, Variant::general);
  const std::size_t n = parts.size();
  if (profile.tables.size() != n) throw InputError("profile does not match decomposition size");
  const WeightMatrix w = config.weights_for(n);
  const double lambda = config.lambda;

  std::vector<double> mins(n);
  for (std::size_t j = 0; j < n; ++j) mins[j] = detail::table_min(profile.tables[j]);

  BoundProfile next = profile;
  ++next.t;
  parallel_for(n, 64, [&](std::size_t i) {
    const SubEnergy& part = parts[i];
    const auto hood = part.neighborhood();
    const auto sizes = part.neighborhood_sizes();

    double detached = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::binary_search(hood.begin(), hood.end(), j)) detached += w(i, j) * mins[j];
    }

    std::vector<std::size_t> others;
    std::vector<std::size_t> other_sizes;
    for (std::size_t k = 0; k < hood.size(); ++k) {
      if (hood[k] != i) {
        others.push_back(hood[k]);
        other_sizes.push_back(sizes[k]);
      }
    }

    Assignment x(n, 0);
    auto& out = next.tables[i];
    for (std::size_t a = 0; a < out.size(); ++a) {
      x[i] = a;
      for (std::size_t j : others) x[j] = 0;
      double best = std::numeric_limits<double>::infinity();
      while (true) {
        double blend = w(i, i) * profile.tables[i][a];
        for (std::size_t j : others) blend += w(i, j) * profile.tables[j][x[j]];
        best = std::min(best, (1.0 - lambda) * part(x) + lambda * blend);

        std::size_t k = others.size();
        bool done = true;
        while (k > 0) {
          --k;
          if (++x[others[k]] < other_sizes[k]) {
            done = false;
            break;
          }
          x[others[k]] = 0;
        }
        if (done) break;
      }
      out[a] = best + lambda * detached;
    }
  });
  return next;
}

// The same rule specialised to pairwise energies: the joint minimum separates into
// one minimum per neighbour.
inline BoundProfile pairwise_update(const BoundProfile& profile, const EnergyModel& model,
                                    const CoopConfig& config) {
  detail::require_variant(profile, Variant::pairwise);
  detail::require_shape(profile, model);
  const WeightMatrix w = config.weights_for(model.size());
  const double lambda = config.lambda;

  BoundProfile next = profile;
  ++next.t;
  next.tables = detail::min_sum_sweep(
      model, profile.tables, 1.0 - lambda, [&](std::size_t i) { return lambda * w(i, i); },
      [&](std::size_t i, std::size_t j) { return lambda * w(i, j); });
  return next;
}

// Rescaled rule with w_ii = 0 and a single effective strength alpha.
inline BoundProfile alpha_update(const BoundProfile& profile, const EnergyModel& model, double alpha) {
  detail::require_variant(profile, Variant::alpha);
  detail::require_shape(profile, model);
  if (!(alpha > 0.0)) throw InputError("alpha must be positive, got " + std::to_string(alpha));

  BoundProfile next = profile;
  ++next.t;
  next.tables = detail::min_sum_sweep(
      model, profile.tables, 1.0, [](std::size_t) { return 0.0; },
      [&](std::size_t, std::size_t) { return alpha; });
  return next;
}

// Alpha rule on offset tables, then z_i = min Psi''_i is removed. The
// removed amounts are folded into `offsets` so that tables + offsets is
// exactly the alpha-variant Psi':
//   offsets_i(t+1) = z_i(t+1) + alpha sum_{j != i} offsets_j(t)
inline BoundProfile offset_update(const BoundProfile& profile, const EnergyModel& model, double alpha) {
  detail::require_variant(profile, Variant::offset);
  detail::require_shape(profile, model);
  if (!(alpha > 0.0)) throw InputError("alpha must be positive, got " + std::to_string(alpha));

  const std::size_t n = model.size();
  BoundProfile next = profile;
  ++next.t;
  next.tables = detail::min_sum_sweep(
      model, profile.tables, 1.0, [](std::size_t) { return 0.0; },
      [&](std::size_t, std::size_t) { return alpha; });

  double offset_total = 0.0;
  for (double z : profile.offsets) offset_total += z;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = detail::table_min(next.tables[i]);
    for (double& v : next.tables[i]) v -= z;
    next.offsets[i] = z + alpha * (offset_total - profile.offsets[i]);
  }
  return next;
}

// Per-variable argmin; ties go to the lowest label index.
inline Assignment extract_assignment(const BoundProfile& profile) {
  Assignment x(profile.tables.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& t = profile.tables[i];
    x[i] = static_cast<std::size_t>(std::min_element(t.begin(), t.end()) - t.begin());
  }
  return x;
}

struct Certificate {
  double lower_bound = 0.0;
  Assignment assignment;
  double upper_bound = 0.0;
  bool certified = false;
  // whether the configuration and starting point make lower_bound a valid
  // bound at all
  bool bound_valid = false;
};

// The bound tables on the unscaled Psi scale, whatever the variant.
inline std::vector<std::vector<double>> bound_tables(const BoundProfile& profile, double lambda) {
  auto tables = profile.tables;
  if (profile.variant == Variant::alpha || profile.variant == Variant::offset) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      const double off = profile.variant == Variant::offset ? profile.offsets[i] : 0.0;
      for (double& v : tables[i]) v = (1.0 - lambda) * (v + off);
    }
  }
  return tables;
}

inline Certificate certify(const BoundProfile& profile, const EnergyModel& model, const CoopConfig& config) {
  detail::require_shape(profile, model);
  const std::size_t n = model.size();
  const double lambda = config.lambda;

  bool valid = profile.from_zero && lambda >= 0.0 && lambda < 1.0;
  if (profile.variant == Variant::general || profile.variant == Variant::pairwise) {
    const WeightMatrix w = config.weights_for(n);
    for (std::size_t j = 0; j < n && valid; ++j) valid = w.column_sum(j) <= 1.0 + 1e-12;
  } else {
    // implied weights w_ij = alpha / lambda off the diagonal
    const double alpha = config.alpha_for(n);
    valid = valid && alpha * static_cast<double>(n > 0 ? n - 1 : 0) <= lambda + 1e-12;
  }

  Certificate cert;
  cert.bound_valid = valid;
  cert.lower_bound = model.shift();
  for (const auto& t : bound_tables(profile, lambda)) cert.lower_bound += detail::table_min(t);
  cert.assignment = extract_assignment(profile);
  cert.upper_bound = evaluate(model, cert.assignment);
  cert.certified = valid && cert.upper_bound - cert.lower_bound <= kCertEpsilon;
  return cert;
}

struct DiscreteTraceRow {
  std::size_t iter = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double delta = 0.0;
};

struct DiscreteReport {
  BoundProfile profile;
  Certificate certificate;
  std::vector<DiscreteTraceRow> trace;
  bool converged = false;
  std::size_t iterations = 0;
};

inline double sup_change(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].size(); ++k) d = std::max(d, std::abs(a[i][k] - b[i][k]));
  return d;
}

// Convergence: sup-norm change <= tol on 3 consecutive iterations.
inline DiscreteReport solve_discrete(const EnergyModel& model, const CoopConfig& config,
                                     std::optional<BoundProfile> start = std::nullopt) {
  validate(config, model.size());
  const std::size_t n = model.size();
  BoundProfile profile = start ? std::move(*start) : BoundProfile::zeros(model, config.variant);
  if (profile.variant != config.variant) throw InputError("starting profile has the wrong variant");
  detail::require_shape(profile, model);

  std::vector<SubEnergy> parts;
  if (config.variant == Variant::general) parts = decompose(model);
  const double alpha = config.alpha_for(n);

  DiscreteReport report;
  std::size_t calm = 0;
  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    BoundProfile next;
    switch (config.variant) {
      case Variant::general: next = general_update(profile, parts, config); break;
      case Variant::pairwise: next = pairwise_update(profile, model, config); break;
      case Variant::alpha: next = alpha_update(profile, model, alpha); break;
      case Variant::offset: next = offset_update(profile, model, alpha); break;
    }
    // offset tables settle before their offsets do; watch both
    double delta = sup_change(next.tables, profile.tables);
    if (config.variant == Variant::offset) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < next.tables[i].size(); ++k)
          delta = std::max(delta, std::abs(next.tables[i][k] + next.offsets[i] - profile.tables[i][k] - profile.offsets[i]));
    }
    profile = std::move(next);
    const Certificate cert = certify(profile, model, config);
    report.trace.push_back({iter, cert.lower_bound, cert.upper_bound, delta});
    report.iterations = iter;
    calm = delta <= config.tol ? calm + 1 : 0;
    if (calm >= 3) {
      report.converged = true;
      break;
    }
  }
  report.certificate = certify(profile, model, config);
  report.profile = std::move(profile);
  return report;
}

}  // namespace coopt
