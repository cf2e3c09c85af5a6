#pragma once

// Continuous-variable cooperative optimization on a 1-D grid.
//
// Fields psi_i live on Grid1D with psi = 0 on both end points and are kept
// at h * sum psi^2 = 1. Four ways to advance them:
//
//   integral_update  psi_i <- exp(-e_i/hbar) prod_j [h sum_m exp(-e_ij(x, x_m)/hbar) psi_j(x_m)^2]
//   kernel_step      psi_i <- K * (psi_i exp(-dt e_i/hbar) prod_j [h sum_m exp(-dt e_ij/hbar) psi_j^2])
//                    (K applied with odd images past the walls)
//   euler_step       psi_i <- psi_i + dt [(sigma^2/2) D2 psi_i - (V_i/hbar) psi_i]
//   (kernel_step with an identity kernel is the unsmoothed time step)
//
// each followed by renormalization. At a fixed point of the last two,
// H_i psi_i = E_i psi_i with H_i = -(hbar sigma_i^2 / 2) D2 + V_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coopt/continuous_problem.hpp"
#include "coopt/errors.hpp"
#include "coopt/parallel.hpp"

namespace coopt {

struct GridField {
  std::vector<std::vector<double>> psi;
  double t = 0.0;
  // h sum psi_i^2 just before the last normalization
  std::vector<double> norms;

  std::size_t size() const noexcept { return psi.size(); }
};

// Quadrature weight is h for every point (the end points are zero anyway).
inline double quadrature_norm(std::span<const double> psi, double h) {
  double s = 0.0;
  for (double v : psi) s += v * v;
  return h * s;
}

inline double overlap(std::span<const double> a, std::span<const double> b, double h) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return h * s;
}

// Pins the walls to zero and rescales every particle to h sum psi^2 = 1.
inline void normalize_field(GridField& field, const Grid1D& grid) {
  const double h = grid.spacing();
  field.norms.resize(field.psi.size());
  for (std::size_t i = 0; i < field.psi.size(); ++i) {
    auto& psi = field.psi[i];
    if (psi.size() != grid.points) throw InputError("field does not match the grid");
    psi.front() = 0.0;
    psi.back() = 0.0;
    const double norm = quadrature_norm(psi, h);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericalError("field of particle " + std::to_string(i) +
                           (norm > 0.0 ? " overflowed" : " underflowed to zero"));
    }
    const double scale = 1.0 / std::sqrt(norm);
    for (double& v : psi) v *= scale;
    field.norms[i] = norm;
  }
}

namespace fields {

inline GridField uniform(std::size_t particles, const Grid1D& grid) {
  GridField f;
  f.psi.assign(particles, std::vector<double>(grid.points, 1.0));
  normalize_field(f, grid);
  return f;
}

// Grid delta at the point nearest `at`, one per particle.
inline std::vector<double> delta(const Grid1D& grid, double at) {
  const double pos = std::round((at - grid.x_min) / grid.spacing());
  if (pos < 1.0 || pos > static_cast<double>(grid.points - 2)) {
    throw InputError("delta position " + std::to_string(at) + " is not an interior grid point");
  }
  std::vector<double> psi(grid.points, 0.0);
  psi[static_cast<std::size_t>(pos)] = 1.0 / std::sqrt(grid.spacing());
  return psi;
}

inline std::vector<double> gaussian(const Grid1D& grid, double center, double width) {
  if (!(width > 0.0)) throw InputError("gaussian width must be positive");
  std::vector<double> psi(grid.points);
  for (std::size_t k = 0; k < grid.points; ++k) {
    const double u = (grid.x(k) - center) / width;
    psi[k] = std::exp(-0.5 * u * u);
  }
  psi.front() = psi.back() = 0.0;
  const double norm = quadrature_norm(psi, grid.spacing());
  if (!(norm > 0.0)) throw InputError("gaussian has no mass on the grid");
  for (double& v : psi) v /= std::sqrt(norm);
  return psi;
}

}  // namespace fields

enum class KernelShape {
  // e^{-T} I_k(T), T = sigma^2 dt / h^2: the lattice heat kernel, whose
  // generator is exactly (sigma^2/2) D2
  discrete_gaussian,
  // exp(-k^2 h^2 / (2 sigma^2 dt)) sampled on the grid
  sampled_gaussian,
  // no smoothing
  identity,
};

struct Kernel {
  double dt = 0.0;
  KernelShape shape = KernelShape::discrete_gaussian;
  std::vector<double> sigma2;
  // one-sided taps per particle: taps[i][d] weights offset +-d
  std::vector<std::vector<double>> taps;
};

namespace detail {

inline std::vector<double> gaussian_taps(double variance_in_cells, KernelShape shape) {
  if (shape == KernelShape::identity || variance_in_cells <= 0.0) return {1.0};
  const double std_cells = std::sqrt(variance_in_cells);
  const auto radius6 = static_cast<std::size_t>(std::ceil(6.0 * std_cells));
  std::vector<double> taps;
  // The Bessel form overflows for very wide kernels; there the sampled
  // Gaussian agrees with it to far below rounding.
  if (shape == KernelShape::sampled_gaussian || variance_in_cells > 500.0) {
    for (std::size_t d = 0; d <= radius6; ++d) {
      const double u = static_cast<double>(d) / std_cells;
      taps.push_back(std::exp(-0.5 * u * u));
    }
  } else {
    // Narrow lattice kernels put visible weight beyond 6 std, so the tail is
    // kept until it drops below 1e-17 of the centre tap.
    const double scale = std::exp(-variance_in_cells);
    taps.push_back(scale * std::cyl_bessel_i(0.0, variance_in_cells));
    for (std::size_t d = 1;; ++d) {
      const double tap = scale * std::cyl_bessel_i(static_cast<double>(d), variance_in_cells);
      if (d > radius6 && tap < 1e-17 * taps.front()) break;
      taps.push_back(tap);
    }
  }
  double total = taps.front();
  for (std::size_t d = 1; d < taps.size(); ++d) total += 2.0 * taps[d];
  for (double& t : taps) t /= total;
  return taps;
}

// Dirichlet walls by odd images: past either end the field continues as
// its own negative mirror, with period 2 (n - 1). For the lattice kernel this
// is the heat semigroup of the Dirichlet D2 exactly. Rounding can leave
// values a few ulps below zero; those are clamped.
inline void convolve(std::span<const double> taps, std::span<const double> in, std::span<double> out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.size());
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(taps.size()) - 1;
  const std::ptrdiff_t period = 2 * (n - 1);
  auto at = [&](std::ptrdiff_t m) {
    m %= period;
    if (m < 0) m += period;
    return m <= n - 1 ? in[m] : -in[period - m];
  };
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    double s = taps[0] * in[k];
    if (k - r >= 0 && k + r < n) {
      for (std::ptrdiff_t d = 1; d <= r; ++d) s += taps[d] * (in[k - d] + in[k + d]);
    } else {
      for (std::ptrdiff_t d = 1; d <= r; ++d) s += taps[d] * (at(k - d) + at(k + d));
    }
    out[k] = std::max(s, 0.0);
  }
}

}  // namespace detail

inline Kernel make_kernel(const ContinuousProblem& problem, const Grid1D& grid, double dt,
                          KernelShape shape = KernelShape::discrete_gaussian) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive");
  Kernel k;
  k.dt = dt;
  k.shape = shape;
  const double h = grid.spacing();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    k.sigma2.push_back(problem.sigma2(i));
    k.taps.push_back(detail::gaussian_taps(k.sigma2.back() * dt / (h * h), shape));
  }
  return k;
}

struct EffectivePotential {
  std::vector<std::vector<double>> values;
};

struct StationaryResult {
  std::vector<double> energies;
  std::vector<double> residuals;
  bool converged = false;
  std::size_t iterations = 0;
  // sup-norm field change of the last step
  double final_change = 0.0;
};

// Potentials tabulated once on a grid. Pair tables are N x N, so one
// operator per solve.
class FieldOperator {
 public:
  FieldOperator(const ContinuousProblem& problem, const Grid1D& grid) : problem_(problem), grid_(grid) {
    problem.validate();
    const std::size_t n = grid.points;
    unary_.resize(problem.size());
    for (std::size_t i = 0; i < problem.size(); ++i) {
      unary_[i].resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        unary_[i][k] = problem.particles[i].potential(grid.x(k));
        if (!std::isfinite(unary_[i][k])) {
          throw InputError("potential of particle " + std::to_string(i) + " is not finite at x = " +
                           std::to_string(grid.x(k)));
        }
      }
    }
    pair_.resize(problem.couplings.size());
    for (std::size_t c = 0; c < problem.couplings.size(); ++c) {
      const auto& coupling = problem.couplings[c];
      pair_[c].resize(n * n);
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t m = 0; m < n; ++m) {
          const double v = coupling.potential(grid.x(k), grid.x(m));
          if (!std::isfinite(v)) throw InputError("pair potential is not finite on the grid");
          pair_[c][k * n + m] = v;
        }
      }
    }
  }

  const ContinuousProblem& problem() const noexcept { return problem_; }
  const Grid1D& grid() const noexcept { return grid_; }

  // exp(-scale * e) for every unary and pair table
  struct Factors {
    double scale = 0.0;
    std::vector<std::vector<double>> unary;
    std::vector<std::vector<double>> pair;
  };

  Factors factors(double scale) const {
    Factors f;
    f.scale = scale;
    f.unary = unary_;
    for (auto& u : f.unary)
      for (double& v : u) v = std::exp(-scale * v);
    f.pair = pair_;
    for (auto& p : f.pair)
      for (double& v : p) v = std::exp(-scale * v);
    return f;
  }

  // V_i(x_k) = e_i(x_k) + sum_j h sum_m e_ij(x_k, x_m) psi_j(x_m)^2
  EffectivePotential potential(const GridField& field) const {
    check_field(field);
    EffectivePotential v;
    v.values = unary_;
    for (std::size_t c = 0; c < pair_.size(); ++c) {
      const auto& coupling = problem_.couplings[c];
      accumulate_average(pair_[c], field.psi[coupling.j], v.values[coupling.i], false);
    }
    return v;
  }

  // Largest |V_i| over all particles and points.
  static double peak(const EffectivePotential& v) {
    double p = 0.0;
    for (const auto& row : v.values)
      for (double x : row) p = std::max(p, std::abs(x));
    return p;
  }

  GridField integral_update(const GridField& field, const Factors& f) const {
    check_field(field);
    GridField next = field;
    for (std::size_t i = 0; i < field.size(); ++i) next.psi[i] = f.unary[i];
    apply_pair_factors(field, f, next);
    normalize_field(next, grid_);
    return next;
  }

  // f must come from factors(kernel.dt / hbar).
  GridField kernel_step(const GridField& field, const Kernel& kernel, const Factors& f) const {
    check_field(field);
    check_kernel(kernel);
    GridField weighted = field;
    for (std::size_t i = 0; i < field.size(); ++i)
      for (std::size_t k = 0; k < grid_.points; ++k) weighted.psi[i][k] *= f.unary[i][k];
    apply_pair_factors(field, f, weighted);

    GridField next = field;
    parallel_for(field.size(), grid_.points * kernel.taps.front().size(), [&](std::size_t i) {
      detail::convolve(kernel.taps[i], weighted.psi[i], next.psi[i]);
    });
    next.t += kernel.dt;
    normalize_field(next, grid_);
    return next;
  }

  GridField euler_step(const GridField& field, const EffectivePotential& v, const Kernel& kernel) const {
    check_field(field);
    check_kernel(kernel);
    const double h2 = grid_.spacing() * grid_.spacing();
    const double dt = kernel.dt;
    const double hbar = problem_.hbar;
    GridField next = field;
    for (std::size_t i = 0; i < field.size(); ++i) {
      const auto& psi = field.psi[i];
      auto& out = next.psi[i];
      const double diffusion = 0.5 * kernel.sigma2[i] / h2;
      for (std::size_t k = 1; k + 1 < grid_.points; ++k) {
        const double lap = psi[k - 1] - 2.0 * psi[k] + psi[k + 1];
        out[k] = psi[k] + dt * (diffusion * lap - v.values[i][k] / hbar * psi[k]);
      }
    }
    next.t += dt;
    normalize_field(next, grid_);
    return next;
  }

  // Rayleigh quotient E_i and residual h^{1/2} ||H_i psi_i - E_i psi_i||.
  StationaryResult stationary(const GridField& field, const EffectivePotential& v) const {
    check_field(field);
    const double h = grid_.spacing();
    StationaryResult r;
    std::vector<double> hpsi(grid_.points, 0.0);
    for (std::size_t i = 0; i < field.size(); ++i) {
      const auto& psi = field.psi[i];
      const double kinetic = 0.5 * problem_.hbar * problem_.sigma2(i) / (h * h);
      double num = 0.0;
      double den = 0.0;
      for (std::size_t k = 1; k + 1 < grid_.points; ++k) {
        hpsi[k] = -kinetic * (psi[k - 1] - 2.0 * psi[k] + psi[k + 1]) + v.values[i][k] * psi[k];
        num += psi[k] * hpsi[k];
        den += psi[k] * psi[k];
      }
      const double energy = num / den;
      double res = 0.0;
      for (std::size_t k = 1; k + 1 < grid_.points; ++k) {
        const double d = hpsi[k] - energy * psi[k];
        res += d * d;
      }
      r.energies.push_back(energy);
      r.residuals.push_back(std::sqrt(h * res));
    }
    return r;
  }

  // Kernel splitting bound dt * max|V| / hbar <= 0.1.
  void check_kernel_stability(const EffectivePotential& v, double dt) const {
    const double ratio = dt * peak(v) / problem_.hbar;
    if (ratio > 0.1) {
      throw StabilityError("kernel step needs dt * max|V| / hbar <= 0.1, got " + std::to_string(ratio) +
                           " (dt = " + std::to_string(dt) + ")");
    }
  }

  // Explicit diffusion bound dt <= 0.25 h^2 / sigma^2, plus dt * max|V| / hbar
  // <= 0.5 so that the update keeps psi nonnegative.
  void check_euler_stability(const EffectivePotential& v, const Kernel& kernel) const {
    const double h2 = grid_.spacing() * grid_.spacing();
    double sigma2 = 0.0;
    for (double s : kernel.sigma2) sigma2 = std::max(sigma2, s);
    const double bound = 0.25 * h2 / sigma2;
    if (kernel.dt > bound) {
      throw StabilityError("euler step needs dt <= 0.25 h^2 / sigma^2 = " + std::to_string(bound) +
                           ", got dt = " + std::to_string(kernel.dt));
    }
    const double ratio = kernel.dt * peak(v) / problem_.hbar;
    if (ratio > 0.5) {
      throw StabilityError("euler step needs dt * max|V| / hbar <= 0.5, got " + std::to_string(ratio));
    }
  }

 private:
  void check_field(const GridField& field) const {
    if (field.size() != problem_.size()) throw InputError("field does not match particle count");
    for (const auto& psi : field.psi)
      if (psi.size() != grid_.points) throw InputError("field does not match the grid");
  }

  void check_kernel(const Kernel& kernel) const {
    if (kernel.taps.size() != problem_.size() || kernel.sigma2.size() != problem_.size()) {
      throw InputError("kernel does not match particle count");
    }
  }

  // target[k] (+)= h sum_m table[k, m] psi[m]^2, or *= when multiply is set
  void accumulate_average(const std::vector<double>& table, std::span<const double> psi,
                          std::vector<double>& target, bool multiply) const {
    const std::size_t n = grid_.points;
    const double h = grid_.spacing();
    std::vector<double> weight(n);
    for (std::size_t m = 0; m < n; ++m) weight[m] = h * psi[m] * psi[m];
    for (std::size_t k = 0; k < n; ++k) {
      const double* row = table.data() + k * n;
      double s = 0.0;
      for (std::size_t m = 0; m < n; ++m) s += row[m] * weight[m];
      if (multiply) {
        target[k] *= s;
      } else {
        target[k] += s;
      }
    }
  }

  // Multiplies out.psi[i] by prod_j h sum_m F_ij(x, x_m) psi_j(x_m)^2, reading
  // the neighbours from `field` (time t).
  void apply_pair_factors(const GridField& field, const Factors& f, GridField& out) const {
    const std::size_t n = grid_.points;
    parallel_for(field.size(), n * n * std::max<std::size_t>(1, pair_.size()), [&](std::size_t i) {
      for (std::size_t c = 0; c < pair_.size(); ++c) {
        const auto& coupling = problem_.couplings[c];
        if (coupling.i == i) accumulate_average(f.pair[c], field.psi[coupling.j], out.psi[i], true);
      }
    });
  }

  const ContinuousProblem& problem_;
  Grid1D grid_;
  std::vector<std::vector<double>> unary_;
  std::vector<std::vector<double>> pair_;
};

// One-shot forms of the operator methods; each tabulates the potentials.

inline GridField integral_update(const GridField& field, const ContinuousProblem& problem, const Grid1D& grid) {
  FieldOperator op(problem, grid);
  return op.integral_update(field, op.factors(1.0 / problem.hbar));
}

inline EffectivePotential build_potential(const GridField& field, const ContinuousProblem& problem,
                                          const Grid1D& grid) {
  return FieldOperator(problem, grid).potential(field);
}

inline GridField kernel_step(const GridField& field, const ContinuousProblem& problem, const Grid1D& grid,
                             const Kernel& kernel) {
  FieldOperator op(problem, grid);
  op.check_kernel_stability(op.potential(field), kernel.dt);
  return op.kernel_step(field, kernel, op.factors(kernel.dt / problem.hbar));
}

inline GridField euler_step(const GridField& field, const EffectivePotential& v, const ContinuousProblem& problem,
                            const Grid1D& grid, const Kernel& kernel) {
  FieldOperator op(problem, grid);
  op.check_euler_stability(v, kernel);
  return op.euler_step(field, v, kernel);
}

enum class Integrator { kernel, euler };

inline std::string_view to_string(Integrator i) { return i == Integrator::kernel ? "kernel" : "euler"; }

inline std::optional<Integrator> parse_integrator(std::string_view text) {
  if (text == "kernel") return Integrator::kernel;
  if (text == "euler") return Integrator::euler;
  return std::nullopt;
}

struct GroundConfig {
  double dt = 1e-4;
  // stop once the sup-norm change of one step is <= tol * dt
  double tol = 1e-8;
  std::size_t max_iters = 1'000'000;
  Integrator integrator = Integrator::kernel;
  KernelShape kernel_shape = KernelShape::discrete_gaussian;
};

struct GroundSolution {
  GridField field;
  EffectivePotential potential;
  StationaryResult result;
};

// Relaxes the fields to a stationary state and reports E_i and residuals
// against the potential of the final fields. Stability bounds are checked
// against the starting fields before the first step.
inline GroundSolution solve_ground(const ContinuousProblem& problem, const Grid1D& grid, const GroundConfig& config,
                                   std::optional<GridField> start = std::nullopt) {
  if (!(config.tol >= 0.0)) throw InputError("tol must be nonnegative");
  FieldOperator op(problem, grid);
  const Kernel kernel = make_kernel(problem, grid, config.dt, config.kernel_shape);
  GridField field = start ? std::move(*start) : fields::uniform(problem.size(), grid);
  normalize_field(field, grid);

  EffectivePotential v = op.potential(field);
  std::optional<FieldOperator::Factors> factors;
  if (config.integrator == Integrator::kernel) {
    op.check_kernel_stability(v, config.dt);
    factors = op.factors(config.dt / problem.hbar);
  } else {
    op.check_euler_stability(v, kernel);
  }

  const bool coupled = !problem.couplings.empty();
  const double threshold = config.tol * config.dt;
  StationaryResult status;
  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    if (config.integrator == Integrator::euler && coupled && iter > 1) v = op.potential(field);
    GridField next = config.integrator == Integrator::kernel ? op.kernel_step(field, kernel, *factors)
                                                             : op.euler_step(field, v, kernel);
    double change = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i)
      for (std::size_t k = 0; k < grid.points; ++k)
        change = std::max(change, std::abs(next.psi[i][k] - field.psi[i][k]));
    field = std::move(next);
    status.iterations = iter;
    status.final_change = change;
    if (change <= threshold) {
      status.converged = true;
      break;
    }
  }

  GroundSolution out;
  out.potential = op.potential(field);
  StationaryResult diag = op.stationary(field, out.potential);
  diag.converged = status.converged;
  diag.iterations = status.iterations;
  diag.final_change = status.final_change;
  out.result = std::move(diag);
  out.field = std::move(field);
  return out;
}

}  // namespace coopt
