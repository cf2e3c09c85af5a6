#pragma once

// Reference engines used to check the solvers. Nothing in here calls into
// the solver headers: the enumerator reads the model tables directly and
// the eigensolver builds its own Hamiltonian.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "coopt/energy_model.hpp"
#include "coopt/errors.hpp"

namespace coopt::oracle {

inline constexpr std::size_t kMaxEnumeration = 10'000'000;

struct EnumerationResult {
  Assignment optimum;
  double energy = std::numeric_limits<double>::infinity();
  std::size_t visited = 0;
  // Energies of every assignment in lexicographic order (first variable
  // most significant); filled for n <= 4 or on request.
  std::optional<std::vector<double>> landscape;
};

// Exhaustive minimization. Ties keep the lexicographically first assignment.
inline EnumerationResult enumerate(const EnergyModel& model, bool keep_landscape = false) {
  const std::size_t n = model.size();
  const std::size_t total = model.assignment_count();
  if (total > kMaxEnumeration) {
    throw InputError("instance has " + std::to_string(total) +
                     " assignments, enumeration limit is " + std::to_string(kMaxEnumeration));
  }

  EnumerationResult result;
  if (keep_landscape || n <= 4) result.landscape.emplace().reserve(total);

  // pair lookup: for each variable, the (j, table) pairs it owns
  struct Owned {
    std::size_t j;
    const PairTable* table;
  };
  std::vector<std::vector<Owned>> owned(n);
  for (const auto& term : model.terms()) owned[term.i].push_back({term.j, &term.table});

  Assignment x(n, 0);
  while (true) {
    double e = model.shift();
    for (std::size_t i = 0; i < n; ++i) {
      e += model.unary(i)[x[i]];
      for (const auto& o : owned[i]) e += (*o.table)(x[i], x[o.j]);
    }
    ++result.visited;
    if (result.landscape) result.landscape->push_back(e);
    if (e < result.energy) {
      result.energy = e;
      result.optimum = x;
    }

    // odometer, last variable fastest
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++x[k] < model.domain_size(k)) break;
      x[k] = 0;
      if (k == 0) return result;
    }
    if (n == 0) return result;
  }
}

struct EigenResult {
  double eigenvalue = 0.0;
  // Full grid including the two Dirichlet endpoints (always zero),
  // normalized so that spacing * sum(v^2) = 1, with sum(v) >= 0.
  std::vector<double> eigenvector;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Lowest eigenpair of H = -(hbar^2 / 2m) D2 + diag(V) on a uniform grid
// whose first and last points are pinned to zero. Inverse power iteration
// with the Gershgorin lower bound as shift; each iteration is one
// tridiagonal solve.
inline EigenResult ground_eig(std::span<const double> potential, double spacing, double mass,
                              double hbar, double eigen_tol = 1e-10, std::size_t max_iters = 100000) {
  const std::size_t points = potential.size();
  if (points < 3) throw InputError("ground_eig needs at least 3 grid points");
  if (points > 2000) throw InputError("ground_eig supports at most 2000 grid points");
  if (!(spacing > 0.0) || !(mass > 0.0) || !(hbar > 0.0)) {
    throw InputError("ground_eig needs positive spacing, mass and hbar");
  }

  const std::size_t m = points - 2;
  const double c = hbar * hbar / (2.0 * mass * spacing * spacing);
  std::vector<double> diag(m);
  for (std::size_t k = 0; k < m; ++k) diag[k] = potential[k + 1] + 2.0 * c;

  // Gershgorin: every eigenvalue is >= min_k (diag_k - row off-diagonal sum),
  // and the kinetic term keeps the lowest one strictly above min V.
  double shift = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) {
    const double off = (k > 0 ? c : 0.0) + (k + 1 < m ? c : 0.0);
    shift = std::min(shift, diag[k] - off);
  }

  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t k = 0; k < m; ++k) {
      double s = diag[k] * v[k];
      if (k > 0) s -= c * v[k - 1];
      if (k + 1 < m) s -= c * v[k + 1];
      out[k] = s;
    }
  };

  // (H - shift) is symmetric positive definite, so the Thomas algorithm
  // needs no pivoting.
  auto solve = [&](const std::vector<double>& rhs, std::vector<double>& out) {
    std::vector<double> cp(m), dp(m);
    double denom = diag[0] - shift;
    cp[0] = -c / denom;
    dp[0] = rhs[0] / denom;
    for (std::size_t k = 1; k < m; ++k) {
      denom = (diag[k] - shift) + c * cp[k - 1];
      cp[k] = -c / denom;
      dp[k] = (rhs[k] + c * dp[k - 1]) / denom;
    }
    out[m - 1] = dp[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) out[k] = dp[k] - cp[k] * out[k + 1];
  };

  auto normalize = [](std::vector<double>& v) {
    double norm = 0.0;
    for (double a : v) norm += a * a;
    norm = std::sqrt(norm);
    for (double& a : v) a /= norm;
  };

  std::vector<double> v(m, 1.0), w(m), hv(m);
  normalize(v);
  EigenResult result;
  double previous = std::numeric_limits<double>::infinity();
  double rayleigh = 0.0;
  double residual = 0.0;
  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    solve(v, w);
    normalize(w);
    v.swap(w);

    apply(v, hv);
    rayleigh = 0.0;
    for (std::size_t k = 0; k < m; ++k) rayleigh += v[k] * hv[k];
    residual = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double r = hv[k] - rayleigh * v[k];
      residual += r * r;
    }
    // v has unit Euclidean norm; on the quadrature scale the residual of
    // the h-normalized vector is the same number.
    residual = std::sqrt(residual);
    result.iterations = iter;
    if (std::abs(rayleigh - previous) <= eigen_tol && residual <= 1e-9) {
      result.converged = true;
      break;
    }
    previous = rayleigh;
  }

  double sum = 0.0;
  for (double a : v) sum += a;
  const double sign = sum < 0.0 ? -1.0 : 1.0;
  const double scale = sign / std::sqrt(spacing);
  result.eigenvector.assign(points, 0.0);
  for (std::size_t k = 0; k < m; ++k) result.eigenvector[k + 1] = scale * v[k];
  result.eigenvalue = rayleigh;
  result.residual = residual;
  return result;
}

}  // namespace coopt::oracle
