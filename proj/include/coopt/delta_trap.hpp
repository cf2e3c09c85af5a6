#pragma once

// A grid delta away from the potential minimum is a stationary state of the
// unsmoothed time step: every factor multiplies a single nonzero point. The
// Gaussian kernel spreads the field and lets it relax to the ground state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "coopt/continuous_solver.hpp"
#include "coopt/oracle.hpp"

namespace coopt {

struct DeltaTrapConfig {
  // one start position per particle
  std::vector<double> positions;
  double dt = 1e-3;
  std::size_t unsmoothed_steps = 100;
  GroundConfig smoothed{};
};

struct DeltaTrapReport {
  // largest per-step sup-norm change over the unsmoothed steps
  double unsmoothed_max_change = 0.0;
  GridField unsmoothed;
  GroundSolution smoothed;
  // overlap of each smoothed field with the oracle ground state of its
  // final effective potential
  std::vector<double> smoothed_overlap;
  std::vector<double> oracle_energies;
};

inline DeltaTrapReport delta_trap_demo(const ContinuousProblem& problem, const Grid1D& grid,
                                       const DeltaTrapConfig& config) {
  if (config.positions.size() != problem.size()) {
    throw InputError("delta_trap_demo needs one start position per particle");
  }
  GridField start;
  for (double at : config.positions) start.psi.push_back(fields::delta(grid, at));

  DeltaTrapReport report;
  FieldOperator op(problem, grid);
  const Kernel still = make_kernel(problem, grid, config.dt, KernelShape::identity);
  const auto factors = op.factors(config.dt / problem.hbar);
  GridField field = start;
  for (std::size_t s = 0; s < config.unsmoothed_steps; ++s) {
    GridField next = op.kernel_step(field, still, factors);
    for (std::size_t i = 0; i < field.size(); ++i)
      for (std::size_t k = 0; k < grid.points; ++k)
        report.unsmoothed_max_change =
            std::max(report.unsmoothed_max_change, std::abs(next.psi[i][k] - field.psi[i][k]));
    field = std::move(next);
  }
  report.unsmoothed = std::move(field);

  GroundConfig smoothed = config.smoothed;
  smoothed.integrator = Integrator::kernel;
  report.smoothed = solve_ground(problem, grid, smoothed, start);
  const double h = grid.spacing();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto eig = oracle::ground_eig(report.smoothed.potential.values[i], h, problem.hbar / problem.sigma2(i),
                                        problem.hbar);
    report.oracle_energies.push_back(eig.eigenvalue);
    report.smoothed_overlap.push_back(overlap(report.smoothed.field.psi[i], eig.eigenvector, h));
  }
  return report;
}

}  // namespace coopt
