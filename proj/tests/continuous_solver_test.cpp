#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "coopt/continuous_solver.hpp"
#include "coopt/delta_trap.hpp"
#include "coopt/oracle.hpp"

namespace coopt {
namespace {

ContinuousProblem single(UnaryPotential e, double hbar = 1.0, double mass = 1.0) {
  ContinuousProblem p;
  p.hbar = hbar;
  p.particles.push_back({"p0", mass, std::move(e), std::nullopt});
  return p;
}

ContinuousProblem harmonic_single() { return single(potentials::harmonic()); }

ContinuousProblem coupled_pair(double k = 1.0) {
  ContinuousProblem p;
  p.particles.push_back({"a", 1.0, potentials::harmonic(), std::nullopt});
  p.particles.push_back({"b", 1.0, potentials::harmonic(), std::nullopt});
  p.couplings.push_back({0, 1, potentials::pair_harmonic(k)});
  p.couplings.push_back({1, 0, potentials::pair_harmonic(k)});
  return p;
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

std::vector<double> on_grid(const Grid1D& g, auto f) {
  std::vector<double> v(g.points);
  for (std::size_t k = 0; k < g.points; ++k) v[k] = f(g.x(k));
  return v;
}

const Grid1D kHarmonicGrid = Grid1D::make(-8, 8, 401);

TEST(Grid, Geometry) {
  const auto g = Grid1D::make(-1, 1, 201);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.01);
  EXPECT_DOUBLE_EQ(g.x(200), 1.0);
  EXPECT_THROW(Grid1D::make(0, 1, 2), InputError);
  EXPECT_THROW(Grid1D::make(1, 1, 10), InputError);
}

TEST(Kernel, TapsSumToOne) {
  const auto problem = harmonic_single();
  for (KernelShape shape : {KernelShape::discrete_gaussian, KernelShape::sampled_gaussian}) {
    for (double dt : {1e-5, 1e-3, 0.1, 2.0}) {
      const auto k = make_kernel(problem, kHarmonicGrid, dt, shape);
      const auto& taps = k.taps[0];
      double total = taps[0];
      for (std::size_t d = 1; d < taps.size(); ++d) {
        EXPECT_GE(taps[d], 0.0);
        total += 2.0 * taps[d];
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
  EXPECT_EQ(make_kernel(problem, kHarmonicGrid, 1.0, KernelShape::identity).taps[0], std::vector<double>{1.0});
}

// The lattice heat kernel has variance sigma^2 dt exactly.
TEST(Kernel, DiscreteGaussianVariance) {
  const auto g = Grid1D::make(-5, 5, 201);
  const auto k = make_kernel(harmonic_single(), g, 0.02);
  const auto& taps = k.taps[0];
  double var = 0.0;
  for (std::size_t d = 1; d < taps.size(); ++d) var += 2.0 * taps[d] * std::pow(d * g.spacing(), 2);
  EXPECT_NEAR(var, 0.02, 1e-14);
}

TEST(IntegralUpdate, ZeroPotentialKeepsUniform) {
  const auto g = Grid1D::make(-1, 1, 201);
  const auto problem = single(potentials::box());
  const auto start = fields::uniform(1, g);
  const auto next = integral_update(start, problem, g);
  EXPECT_LE(sup_diff(next.psi[0], start.psi[0]), 1e-14);
}

// With no neighbours the update is exp(-e / hbar) up to normalization.
TEST(IntegralUpdate, OneStepIsBoltzmannFactor) {
  const auto g = Grid1D::make(-4, 4, 201);
  const auto problem = single([](double x) { return x * x; });
  const auto next = integral_update(fields::uniform(1, g), problem, g);
  const double ratio0 = next.psi[0][100] / std::exp(0.0);
  for (std::size_t k = 1; k + 1 < g.points; ++k) {
    const double x = g.x(k);
    EXPECT_NEAR(next.psi[0][k] / std::exp(-x * x), ratio0, 1e-9 * ratio0);
  }
}

TEST(IntegralUpdate, ZeroCouplingDecouples) {
  const auto g = Grid1D::make(-4, 4, 101);
  ContinuousProblem two = coupled_pair(0.0);
  two.particles[1].potential = potentials::quartic(0.3);
  GridField start;
  start.psi = {fields::gaussian(g, 0.5, 1.0), fields::gaussian(g, -1.0, 0.7)};
  const auto joint = integral_update(start, two, g);
  for (std::size_t i = 0; i < 2; ++i) {
    GridField alone;
    alone.psi = {start.psi[i]};
    const auto solo = integral_update(alone, single(two.particles[i].potential), g);
    EXPECT_LE(sup_diff(joint.psi[i], solo.psi[0]), 1e-13);
  }
}

TEST(BuildPotential, NoPairsIsUnary) {
  const auto problem = harmonic_single();
  const auto v = build_potential(fields::uniform(1, kHarmonicGrid), problem, kHarmonicGrid);
  EXPECT_EQ(v.values[0], on_grid(kHarmonicGrid, potentials::harmonic()));
}

TEST(BuildPotential, GaussianSecondMoment) {
  const auto g = Grid1D::make(-10, 10, 801);
  ContinuousProblem p;
  p.particles.push_back({"a", 1.0, potentials::harmonic(), std::nullopt});
  p.particles.push_back({"b", 1.0, potentials::box(), std::nullopt});
  p.couplings.push_back({0, 1, [](double x, double y) { return x * x * y * y; }});
  const double s = 0.8;
  GridField f;
  // psi^2 is a Gaussian density of variance s^2
  f.psi = {fields::uniform(1, g).psi[0], fields::gaussian(g, 0.0, s * std::numbers::sqrt2)};
  const auto v = build_potential(f, p, g);
  for (std::size_t k = 0; k < g.points; ++k) {
    const double x = g.x(k);
    EXPECT_NEAR(v.values[0][k], 0.5 * x * x + x * x * s * s, 1e-6);
  }
  EXPECT_EQ(v.values[1], std::vector<double>(g.points, 0.0));
}

TEST(BuildPotential, SiftingProperty) {
  const auto g = Grid1D::make(-4, 4, 161);
  ContinuousProblem p = coupled_pair(2.0);
  GridField f;
  f.psi = {fields::uniform(1, g).psi[0], fields::delta(g, 1.5)};
  const auto v = build_potential(f, p, g);
  for (std::size_t k = 0; k < g.points; ++k) {
    const double x = g.x(k);
    EXPECT_NEAR(v.values[0][k], 0.5 * x * x + (x - 1.5) * (x - 1.5), 1e-12);
  }
}

// k steps of the free kernel give a Gaussian-shaped field of variance sigma^2 k dt.
TEST(KernelStep, ConvolutionSemigroup) {
  const auto g = Grid1D::make(-5, 5, 201);
  const auto problem = single(potentials::box());
  const double dt = 0.01;
  const auto kernel = make_kernel(problem, g, dt);
  GridField f;
  f.psi = {fields::delta(g, 0.0)};
  for (int step = 1; step <= 10; ++step) {
    f = kernel_step(f, problem, g, kernel);
    double mass = 0.0, second = 0.0;
    for (std::size_t k = 0; k < g.points; ++k) {
      mass += f.psi[0][k];
      second += f.psi[0][k] * g.x(k) * g.x(k);
    }
    EXPECT_NEAR(second / mass, step * dt, 1e-6);
  }
  // one step with the combined kernel gives the same field
  GridField once;
  once.psi = {fields::delta(g, 0.0)};
  once = kernel_step(once, problem, g, make_kernel(problem, g, 10 * dt));
  EXPECT_LE(sup_diff(once.psi[0], f.psi[0]), 1e-6);
}

TEST(KernelStep, OneStepChangeIsLinearInDt) {
  const auto problem = harmonic_single();
  GridField start;
  start.psi = {fields::gaussian(kHarmonicGrid, 1.0, 1.5)};
  double previous = 0.0;
  for (double dt : {1e-3, 5e-4, 2.5e-4, 1.25e-4}) {
    const auto next = kernel_step(start, problem, kHarmonicGrid, make_kernel(problem, kHarmonicGrid, dt));
    const double change = sup_diff(next.psi[0], start.psi[0]);
    if (previous > 0.0) {
      EXPECT_NEAR(change / previous, 0.5, 0.1);
    }
    previous = change;
  }
}

TEST(KernelStep, StabilityPrecheck) {
  const auto problem = harmonic_single();
  const auto f = fields::uniform(1, kHarmonicGrid);
  // max V = 32 on [-8, 8]
  EXPECT_THROW(kernel_step(f, problem, kHarmonicGrid, make_kernel(problem, kHarmonicGrid, 4e-3)), StabilityError);
  EXPECT_NO_THROW(kernel_step(f, problem, kHarmonicGrid, make_kernel(problem, kHarmonicGrid, 3e-3)));
}

TEST(EulerStep, StabilityPrecheck) {
  const auto problem = harmonic_single();
  const auto f = fields::uniform(1, kHarmonicGrid);
  const auto v = build_potential(f, problem, kHarmonicGrid);
  // 0.25 h^2 / sigma^2 = 4e-4
  EXPECT_THROW(euler_step(f, v, problem, kHarmonicGrid, make_kernel(problem, kHarmonicGrid, 4.1e-4)), StabilityError);
  EXPECT_NO_THROW(euler_step(f, v, problem, kHarmonicGrid, make_kernel(problem, kHarmonicGrid, 4e-4)));
}

TEST(EulerStep, LowestModeDecayRate) {
  const double L = 2.0;
  const auto g = Grid1D::make(0, L, 201);
  for (double sigma2 : {1.0, 0.5}) {
    ContinuousProblem problem = single(potentials::box());
    problem.particles[0].sigma2 = sigma2;
    const double dt = 0.2 * g.spacing() * g.spacing() / sigma2;
    const auto kernel = make_kernel(problem, g, dt);
    GridField f;
    f.psi = {on_grid(g, [&](double x) { return std::sin(std::numbers::pi * x / L); })};
    normalize_field(f, g);
    const auto v = build_potential(f, problem, g);
    double log_decay = 0.0;
    const int steps = 2000;
    for (int s = 0; s < steps; ++s) {
      f = euler_step(f, v, problem, g, kernel);
      log_decay += 0.5 * std::log(f.norms[0]);
    }
    const double rate = -log_decay / (steps * dt);
    const double wave = std::numbers::pi / L;
    EXPECT_NEAR(rate / (0.5 * sigma2 * wave * wave), 1.0, 0.05);
  }
}

TEST(EulerStep, OracleEigenvectorIsStationary) {
  const auto problem = harmonic_single();
  const auto eig = oracle::ground_eig(on_grid(kHarmonicGrid, potentials::harmonic()), kHarmonicGrid.spacing(), 1.0, 1.0);
  GridField f;
  f.psi = {eig.eigenvector};
  const auto v = build_potential(f, problem, kHarmonicGrid);
  const auto next = euler_step(f, v, problem, kHarmonicGrid, make_kernel(problem, kHarmonicGrid, 4e-4));
  EXPECT_LE(sup_diff(next.psi[0], f.psi[0]), 1e-8);
}

TEST(Steps, NormalizationAndNonnegativity) {
  const auto problem = coupled_pair();
  const auto g = Grid1D::make(-6, 6, 121);
  GridField f;
  f.psi = {fields::gaussian(g, 2.0, 0.5), fields::gaussian(g, -1.0, 2.0)};
  FieldOperator op(problem, g);
  const auto kernel = make_kernel(problem, g, 1e-3);
  const auto factors = op.factors(1e-3);
  GridField a = f, b = f;
  for (int s = 0; s < 200; ++s) {
    a = op.kernel_step(a, kernel, factors);
    b = op.euler_step(b, op.potential(b), kernel);
    for (const auto* field : {&a, &b})
      for (const auto& psi : field->psi) {
        ASSERT_LE(std::abs(quadrature_norm(psi, g.spacing()) - 1.0), 1e-9);
        for (double x : psi) ASSERT_GE(x, 0.0);
      }
  }
}

TEST(SolveGround, HarmonicBothIntegrators) {
  const auto problem = harmonic_single();
  const auto eig = oracle::ground_eig(on_grid(kHarmonicGrid, potentials::harmonic()), kHarmonicGrid.spacing(), 1.0, 1.0);
  GroundSolution kernel_run, euler_run;
  for (Integrator integ : {Integrator::kernel, Integrator::euler}) {
    GroundConfig cfg;
    cfg.integrator = integ;
    cfg.dt = 1e-4;
    const auto sol = solve_ground(problem, kHarmonicGrid, cfg);
    EXPECT_TRUE(sol.result.converged) << to_string(integ);
    EXPECT_NEAR(sol.result.energies[0], eig.eigenvalue, 1e-2);
    EXPECT_NEAR(sol.result.energies[0], 0.5, 1e-2);
    EXPECT_GE(overlap(sol.field.psi[0], eig.eigenvector, kHarmonicGrid.spacing()), 0.999);
    EXPECT_LE(sol.result.residuals[0], 1e-4);
    (integ == Integrator::kernel ? kernel_run : euler_run) = sol;
  }
  EXPECT_LE(sup_diff(kernel_run.field.psi[0], euler_run.field.psi[0]), 1e-3);
}

TEST(SolveGround, Box) {
  const auto g = Grid1D::make(0, 2, 201);
  const auto problem = single(potentials::box());
  GroundConfig cfg;
  cfg.integrator = Integrator::euler;
  cfg.dt = 2e-5;
  const auto sol = solve_ground(problem, g, cfg);
  const auto eig = oracle::ground_eig(std::vector<double>(g.points, 0.0), g.spacing(), 1.0, 1.0);
  EXPECT_TRUE(sol.result.converged);
  EXPECT_LE(std::abs(sol.result.energies[0] - eig.eigenvalue) / eig.eigenvalue, 0.02);
  EXPECT_GE(overlap(sol.field.psi[0], eig.eigenvector, g.spacing()), 0.999);
}

// Kernel several cells wide, so the walls have to be handled as images.
TEST(SolveGround, BoxKernelWideTaps) {
  const auto g = Grid1D::make(0, 2, 201);
  GroundConfig cfg;
  cfg.integrator = Integrator::kernel;
  cfg.dt = 1e-3;
  const auto sol = solve_ground(single(potentials::box()), g, cfg);
  const auto eig = oracle::ground_eig(std::vector<double>(g.points, 0.0), g.spacing(), 1.0, 1.0);
  EXPECT_TRUE(sol.result.converged);
  EXPECT_LE(std::abs(sol.result.energies[0] - eig.eigenvalue), 1e-6);
  EXPECT_LE(sol.result.residuals[0], 1e-6);
}

TEST(Kernel, OddImagesKeepWallsPinned) {
  const std::vector<double> taps = detail::gaussian_taps(4.0, KernelShape::discrete_gaussian);
  std::vector<double> in(11, 0.0), out(11);
  in[1] = 1.0;
  detail::convolve(taps, in, out);
  EXPECT_NEAR(out.front(), 0.0, 1e-15);
  EXPECT_NEAR(out.back(), 0.0, 1e-15);
  for (double v : out) EXPECT_GE(v, 0.0);
}

TEST(SolveGround, CoupledSelfConsistency) {
  const auto g = Grid1D::make(-6, 6, 121);
  const auto problem = coupled_pair();
  GroundConfig cfg;
  cfg.integrator = Integrator::euler;
  cfg.dt = 2e-3;
  GridField start;
  start.psi = {fields::gaussian(g, 1.0, 1.0), fields::gaussian(g, -0.5, 1.5)};
  const auto sol = solve_ground(problem, g, cfg, start);
  ASSERT_TRUE(sol.result.converged);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LE(sol.result.residuals[i], 1e-4);
    const auto eig = oracle::ground_eig(sol.potential.values[i], g.spacing(), 1.0, 1.0);
    EXPECT_NEAR(sol.result.energies[i], eig.eigenvalue, 1e-3);
  }
  // symmetric well: V_i = x^2 + const, so omega = sqrt(2)
  EXPECT_NEAR(sol.result.energies[0], sol.result.energies[1], 1e-6);
  const double v0 = sol.potential.values[0][60];
  EXPECT_NEAR(sol.potential.values[0][70] - v0, std::pow(g.x(70), 2), 1e-6);
}

TEST(SolveGround, GridRefinement) {
  const auto problem = harmonic_single();
  GroundConfig cfg;
  cfg.integrator = Integrator::euler;
  cfg.dt = 1e-4;
  const auto coarse = solve_ground(problem, Grid1D::make(-8, 8, 401), cfg);
  const auto fine = solve_ground(problem, Grid1D::make(-8, 8, 801), cfg);
  EXPECT_LE(std::abs(coarse.result.energies[0] - fine.result.energies[0]), 5e-3);
}

TEST(SolveGround, DecoupledFactorizes) {
  const auto g = Grid1D::make(-4, 4, 81);
  ContinuousProblem two = coupled_pair();
  two.couplings.clear();
  two.particles[1].potential = potentials::quartic(0.2);
  GridField start;
  start.psi = {fields::gaussian(g, 1.0, 1.0), fields::gaussian(g, -0.5, 1.5)};
  for (Integrator integ : {Integrator::kernel, Integrator::euler}) {
    GroundConfig cfg;
    cfg.integrator = integ;
    cfg.dt = 1e-3;
    cfg.tol = 0.0;
    cfg.max_iters = 300;
    const auto joint = solve_ground(two, g, cfg, start);
    for (std::size_t i = 0; i < 2; ++i) {
      GridField alone;
      alone.psi = {start.psi[i]};
      const auto solo = solve_ground(single(two.particles[i].potential), g, cfg, alone);
      EXPECT_EQ(joint.field.psi[i], solo.field.psi[0]);
      EXPECT_EQ(joint.result.energies[i], solo.result.energies[0]);
    }
  }
}

TEST(SolveGround, StabilityViolationThrowsBeforeStepping) {
  GroundConfig cfg;
  cfg.dt = 0.01;
  EXPECT_THROW(solve_ground(harmonic_single(), kHarmonicGrid, cfg), StabilityError);
  cfg.integrator = Integrator::euler;
  cfg.dt = 1e-3;
  EXPECT_THROW(solve_ground(harmonic_single(), kHarmonicGrid, cfg), StabilityError);
}

TEST(DeltaTrap, OffCentreAndCentre) {
  const auto g = Grid1D::make(-8, 8, 201);
  const auto problem = harmonic_single();
  for (double at : {3.0, 0.0}) {
    DeltaTrapConfig cfg;
    cfg.positions = {at};
    cfg.smoothed.dt = 1e-3;
    const auto report = delta_trap_demo(problem, g, cfg);
    EXPECT_LE(report.unsmoothed_max_change, 1e-12);
    EXPECT_EQ(report.unsmoothed.psi[0], fields::delta(g, at));
    EXPECT_TRUE(report.smoothed.result.converged);
    EXPECT_GE(report.smoothed_overlap[0], 0.99);
    EXPECT_NEAR(report.smoothed.result.energies[0], report.oracle_energies[0], 1e-2);
  }
}

}  // namespace
}  // namespace coopt
