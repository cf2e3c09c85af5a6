#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coopt/errors.hpp"

namespace coopt {

// Uniform 1-D grid. The first and last points are Dirichlet walls where
// every field is pinned to zero.
struct Grid1D {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t points = 3;

  static Grid1D make(double x_min, double x_max, std::size_t points) {
    if (points < 3) throw InputError("grid needs at least 3 points, got " + std::to_string(points));
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
      throw InputError("grid bounds must be finite with max > min");
    }
    return Grid1D{x_min, x_max, points};
  }

  double spacing() const noexcept { return (x_max - x_min) / static_cast<double>(points - 1); }
  double x(std::size_t k) const noexcept { return x_min + static_cast<double>(k) * spacing(); }
};

using UnaryPotential = std::function<double(double)>;
using PairPotential = std::function<double(double, double)>;

struct Particle {
  std::string name;
  double mass = 1.0;
  UnaryPotential potential;
  // diffusion scale sigma^2; defaults to hbar / mass
  std::optional<double> sigma2;
};

// e_ij(x_i, x_j), felt by particle i.
struct PairCoupling {
  std::size_t i = 0;
  std::size_t j = 1;
  PairPotential potential;
};

struct ContinuousProblem {
  std::vector<Particle> particles;
  std::vector<PairCoupling> couplings;
  double hbar = 1.0;

  std::size_t size() const noexcept { return particles.size(); }

  double sigma2(std::size_t i) const {
    const auto& p = particles.at(i);
    return p.sigma2 ? *p.sigma2 : hbar / p.mass;
  }

  void validate() const {
    if (particles.empty()) throw InputError("problem has no particles");
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InputError("hbar must be positive");
    for (std::size_t i = 0; i < particles.size(); ++i) {
      const auto& p = particles[i];
      if (!(p.mass > 0.0) || !std::isfinite(p.mass)) {
        throw InputError("particle " + std::to_string(i) + ": mass must be positive");
      }
      if (p.sigma2 && !(*p.sigma2 > 0.0)) {
        throw InputError("particle " + std::to_string(i) + ": sigma2 must be positive");
      }
      if (!p.potential) throw InputError("particle " + std::to_string(i) + " has no potential");
    }
    for (const auto& c : couplings) {
      if (c.i >= particles.size() || c.j >= particles.size() || c.i == c.j) {
        throw InputError("coupling (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                         ") does not name two distinct particles");
      }
      if (!c.potential) throw InputError("coupling without a potential");
    }
  }
};

namespace potentials {

// 1/2 m omega^2 (x - center)^2
inline UnaryPotential harmonic(double m = 1.0, double omega = 1.0, double center = 0.0) {
  return [=](double x) { return 0.5 * m * omega * omega * (x - center) * (x - center); };
}

// k x^4
inline UnaryPotential quartic(double k = 1.0) {
  return [=](double x) { return k * x * x * x * x; };
}

// flat floor; the walls come from the grid ends
inline UnaryPotential box() {
  return [](double) { return 0.0; };
}

// 1/2 k (x - y)^2
inline PairPotential pair_harmonic(double k = 1.0) {
  return [=](double x, double y) { return 0.5 * k * (x - y) * (x - y); };
}

}  // namespace potentials

}  // namespace coopt
