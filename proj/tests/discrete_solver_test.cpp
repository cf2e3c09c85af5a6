#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "coopt/discrete_solver.hpp"
#include "coopt/oracle.hpp"
#include "support/instances.hpp"

namespace coopt {
namespace {

using testing::two_var_model;

CoopConfig config_for(Variant v, double lambda = 0.5) {
  CoopConfig c;
  c.variant = v;
  c.lambda = lambda;
  return c;
}

// w_ii = 0, w_ij = a
WeightMatrix constant_weights(std::size_t n, double a) {
  WeightMatrix w(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) w(i, j) = a;
  return w;
}

double max_abs_diff(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  return sup_change(a, b);
}

TEST(GeneralUpdate, TwoVariableFirstStep) {
  const auto model = two_var_model();
  const auto parts = decompose(model);
  const auto next = general_update(BoundProfile::zeros(model, Variant::general), parts, config_for(Variant::general));
  EXPECT_DOUBLE_EQ(next.tables[0][0], 0.0);
  EXPECT_DOUBLE_EQ(next.tables[0][1], 0.5);
  EXPECT_DOUBLE_EQ(next.tables[1][1], 1.0);
  EXPECT_EQ(next.t, 1u);
}

TEST(GeneralUpdate, ZeroModelStaysZero) {
  const auto model = testing::zero_model(4, 3);
  const auto parts = decompose(model);
  auto p = BoundProfile::zeros(model, Variant::general);
  for (int t = 0; t < 5; ++t) p = general_update(p, parts, config_for(Variant::general));
  for (const auto& table : p.tables)
    for (double v : table) EXPECT_EQ(v, 0.0);
}

TEST(GeneralUpdate, LambdaZeroForgetsHistory) {
  std::mt19937_64 rng(3);
  const auto model = testing::random_instance(rng);
  const auto parts = decompose(model);
  const auto cfg = config_for(Variant::general, 0.0);
  const auto a = general_update(BoundProfile::zeros(model, Variant::general), parts, cfg);
  const auto b = general_update(BoundProfile::random(model, Variant::general, rng, 50.0), parts, cfg);
  EXPECT_EQ(max_abs_diff(a.tables, b.tables), 0.0);
  // Psi_i(x_i, 1) = min over the rest of E_i
  const auto x_best = oracle::enumerate(model).optimum;
  for (std::size_t i = 0; i < model.size(); ++i) EXPECT_LE(a.tables[i][x_best[i]], parts[i](x_best) + 1e-12);
}

TEST(GeneralUpdate, MatchesPairwiseRule) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = testing::random_instance(rng, {.max_vars = 6, .max_domain = 4});
    const auto parts = decompose(model);
    auto g = BoundProfile::zeros(model, Variant::general);
    auto p = BoundProfile::zeros(model, Variant::pairwise);
    for (int t = 0; t < 10; ++t) {
      g = general_update(g, parts, config_for(Variant::general, 0.7));
      p = pairwise_update(p, model, config_for(Variant::pairwise, 0.7));
      ASSERT_LE(max_abs_diff(g.tables, p.tables), 1e-12);
    }
  }
}

TEST(PairwiseUpdate, TwoVariableFirstStep) {
  const auto model = two_var_model();
  const auto next = pairwise_update(BoundProfile::zeros(model, Variant::pairwise), model, config_for(Variant::pairwise));
  EXPECT_DOUBLE_EQ(next.tables[0][0], 0.0);
  EXPECT_DOUBLE_EQ(next.tables[0][1], 0.5);
  EXPECT_DOUBLE_EQ(next.tables[1][0], 0.0);
  EXPECT_DOUBLE_EQ(next.tables[1][1], 1.0);
}

TEST(PairwiseUpdate, NoPairsSelfWeight) {
  const auto model = build_model(testing::numbered_domains({2, 3}), {{1, 2}, {0, 4, 1}}, {});
  auto cfg = config_for(Variant::pairwise, 0.6);
  WeightMatrix w(2);
  w(0, 0) = 0.3;
  w(1, 1) = 0.8;
  w(0, 1) = 0.7;
  w(1, 0) = 0.2;
  cfg.weights = w;
  std::mt19937_64 rng(1);
  auto p = BoundProfile::random(model, Variant::pairwise, rng, 5.0);
  const auto next = pairwise_update(p, model, cfg);
  // absent pairs decouple: each other variable adds lambda w_ij min Psi_j
  const double m0 = *std::min_element(p.tables[0].begin(), p.tables[0].end());
  const double m1 = *std::min_element(p.tables[1].begin(), p.tables[1].end());
  for (std::size_t a = 0; a < 2; ++a)
    EXPECT_NEAR(next.tables[0][a], 0.4 * model.unary(0)[a] + 0.6 * 0.3 * p.tables[0][a] + 0.6 * 0.7 * m1, 1e-14);
  for (std::size_t a = 0; a < 3; ++a)
    EXPECT_NEAR(next.tables[1][a], 0.4 * model.unary(1)[a] + 0.6 * 0.8 * p.tables[1][a] + 0.6 * 0.2 * m0, 1e-14);
}

TEST(PairwiseUpdate, GeometricRecursion) {
  const std::vector<double> e = {0.0, 3.0, 1.25};
  const auto model = build_model(testing::numbered_domains({3}), {e}, {});
  const double lambda = 0.8;
  auto cfg = config_for(Variant::pairwise, lambda);
  cfg.weights = WeightMatrix(1, 1.0);
  auto p = BoundProfile::zeros(model, Variant::pairwise);
  for (int t = 1; t <= 40; ++t) {
    p = pairwise_update(p, model, cfg);
    double geometric = 0.0;
    for (int k = 0; k < t; ++k) geometric += std::pow(lambda, k);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(p.tables[0][a], (1 - lambda) * e[a] * geometric, 1e-12);
  }
}

TEST(AlphaUpdate, TwoVariableFirstStep) {
  const auto model = two_var_model();
  const auto next = alpha_update(BoundProfile::zeros(model, Variant::alpha), model, 1.0);
  EXPECT_EQ(next.tables[0], (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(next.tables[1], (std::vector<double>{0.0, 2.0}));
}

TEST(AlphaUpdate, RejectsNonPositiveAlpha) {
  const auto model = two_var_model();
  EXPECT_THROW(alpha_update(BoundProfile::zeros(model, Variant::alpha), model, 0.0), InputError);
  EXPECT_THROW(offset_update(BoundProfile::zeros(model, Variant::offset), model, -1.0), InputError);
  EXPECT_THROW(alpha_update(BoundProfile::zeros(model, Variant::pairwise), model, 1.0), InputError);
}

TEST(AlphaUpdate, TinyAlphaIsOneShotMinSum) {
  std::mt19937_64 rng(9);
  const auto model = testing::random_instance(rng);
  auto p = BoundProfile::zeros(model, Variant::alpha);
  p = alpha_update(p, model, 1e-300);
  for (std::size_t i = 0; i < model.size(); ++i) {
    std::vector<double> expect(model.unary(i).begin(), model.unary(i).end());
    for (std::size_t k : model.owned_terms(i)) {
      const auto& term = model.terms()[k];
      for (std::size_t a = 0; a < expect.size(); ++a) {
        double row_min = INFINITY;
        for (std::size_t b = 0; b < term.table.cols(); ++b) row_min = std::min(row_min, term.table(a, b));
        expect[a] += row_min;
      }
    }
    for (std::size_t a = 0; a < expect.size(); ++a) EXPECT_NEAR(p.tables[i][a], expect[a], 1e-12);
  }
  const auto again = alpha_update(p, model, 1e-300);
  EXPECT_LE(max_abs_diff(again.tables, p.tables), 1e-12);
}

TEST(AlphaUpdate, EquivalentToPairwise) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = testing::random_instance(rng);
    const std::size_t n = model.size();
    const double lambda = 0.6;
    const double a = 0.9 / static_cast<double>(n - 1);
    auto cfg = config_for(Variant::pairwise, lambda);
    cfg.weights = constant_weights(n, a);
    auto p = BoundProfile::zeros(model, Variant::pairwise);
    auto q = BoundProfile::zeros(model, Variant::alpha);
    for (int t = 0; t < 50; ++t) {
      p = pairwise_update(p, model, cfg);
      q = alpha_update(q, model, lambda * a);
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < p.tables[i].size(); ++k)
          worst = std::max(worst, std::abs(p.tables[i][k] - (1 - lambda) * q.tables[i][k]));
      ASSERT_LE(worst, 1e-12) << "trial " << trial << " t " << t;
    }
  }
}

TEST(OffsetUpdate, TwoVariableFirstStep) {
  const auto model = two_var_model();
  const auto next = offset_update(BoundProfile::zeros(model, Variant::offset), model, 1.0);
  EXPECT_EQ(next.tables[0], (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(next.offsets[0], 0.0);
}

TEST(OffsetUpdate, ConstantTablesOffsetToZero) {
  const auto model = testing::zero_model(3, 4);
  auto p = BoundProfile::zeros(model, Variant::offset);
  for (auto& t : p.tables) std::fill(t.begin(), t.end(), 2.5);
  const auto next = offset_update(p, model, 0.5);
  for (std::size_t i = 0; i < 3; ++i) {
    for (double v : next.tables[i]) EXPECT_EQ(v, 0.0);
    EXPECT_GT(next.offsets[i], 0.0);
  }
}

TEST(OffsetUpdate, MinimumIsZeroAndTracksAlpha) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = testing::random_instance(rng);
    auto q = BoundProfile::zeros(model, Variant::alpha);
    auto r = BoundProfile::zeros(model, Variant::offset);
    for (int t = 0; t < 30; ++t) {
      q = alpha_update(q, model, 0.1);
      r = offset_update(r, model, 0.1);
      for (std::size_t i = 0; i < model.size(); ++i) {
        EXPECT_EQ(*std::min_element(r.tables[i].begin(), r.tables[i].end()), 0.0);
        for (std::size_t k = 0; k < r.tables[i].size(); ++k)
          EXPECT_NEAR(r.tables[i][k] + r.offsets[i], q.tables[i][k], 1e-9 * (1 + std::abs(q.tables[i][k])));
      }
    }
  }
}

TEST(ExtractAssignment, TieBreakAndArgmin) {
  BoundProfile p;
  p.tables = {{0.0, 0.5}, {0.0, 1.5}};
  EXPECT_EQ(extract_assignment(p), (Assignment{0, 0}));
  p.tables = {{0.0, 0.0, 0.0}, {1.0, 1.0}};
  EXPECT_EQ(extract_assignment(p), (Assignment{0, 0}));
  p.tables = {{2.0, 1.0}};
  EXPECT_EQ(extract_assignment(p), (Assignment{1}));
}

TEST(Certify, ZeroModelAtStart) {
  const auto model = testing::zero_model(3, 2);
  const auto cert = certify(BoundProfile::zeros(model, Variant::pairwise), model, config_for(Variant::pairwise));
  EXPECT_EQ(cert.lower_bound, 0.0);
  EXPECT_EQ(cert.upper_bound, 0.0);
  EXPECT_TRUE(cert.certified);
}

TEST(Certify, RandomStartIsNeverCertified) {
  const auto model = testing::zero_model(2, 2);
  std::mt19937_64 rng(1);
  auto p = BoundProfile::random(model, Variant::pairwise, rng, 0.0);
  const auto cert = certify(p, model, config_for(Variant::pairwise));
  EXPECT_FALSE(cert.bound_valid);
  EXPECT_FALSE(cert.certified);
}

TEST(SolveDiscrete, TwoVariableCertified) {
  const auto model = two_var_model();
  for (Variant v : {Variant::general, Variant::pairwise, Variant::alpha, Variant::offset}) {
    const auto report = solve_discrete(model, config_for(v));
    EXPECT_TRUE(report.converged) << to_string(v);
    EXPECT_TRUE(report.certificate.certified) << to_string(v);
    EXPECT_EQ(report.certificate.assignment, (Assignment{0, 0}));
    EXPECT_EQ(report.certificate.upper_bound, 0.0);
    EXPECT_EQ(report.trace.size(), report.iterations);
  }
  // fixed point of the pairwise rule: Psi_1(1) = 4/3, Psi_2(1) = 5/3
  const auto report = solve_discrete(model, config_for(Variant::pairwise));
  EXPECT_NEAR(report.profile.tables[0][1], 4.0 / 3.0, 1e-8);
  EXPECT_NEAR(report.profile.tables[1][1], 5.0 / 3.0, 1e-8);
}

TEST(SolveDiscrete, SeparableTakesArgmins) {
  const auto model = build_model(testing::numbered_domains({3, 2}), {{2, 0.5, 1}, {3, 1}}, {});
  const auto report = solve_discrete(model, config_for(Variant::pairwise));
  EXPECT_TRUE(report.converged);
  EXPECT_EQ(report.certificate.assignment, (Assignment{1, 1}));
  EXPECT_TRUE(report.certificate.certified);
}

TEST(SolveDiscrete, RejectsBadConfig) {
  const auto model = two_var_model();
  EXPECT_THROW(solve_discrete(model, config_for(Variant::pairwise, 1.0)), InputError);
  EXPECT_THROW(solve_discrete(model, config_for(Variant::pairwise, -0.1)), InputError);
  auto cfg = config_for(Variant::general);
  cfg.weights = WeightMatrix(2, 0.3);
  EXPECT_THROW(solve_discrete(model, cfg), InputError);
  auto alpha_cfg = config_for(Variant::alpha);
  alpha_cfg.alpha = 0.0;
  EXPECT_THROW(solve_discrete(model, alpha_cfg), InputError);
}

TEST(SolveDiscrete, NonConvergenceIsReported) {
  std::mt19937_64 rng(2);
  const auto model = testing::random_instance(rng);
  auto cfg = config_for(Variant::pairwise, 0.99);
  cfg.max_iters = 2;
  const auto report = solve_discrete(model, cfg);
  EXPECT_FALSE(report.converged);
  EXPECT_EQ(report.iterations, 2u);
}

// Property: every bound is below the energy landscape and tightens monotonically.
TEST(Properties, BoundValidityAndMonotonicity) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto model = testing::random_instance(rng);
    const auto landscape = *oracle::enumerate(model, true).landscape;
    const auto parts = decompose(model);
    for (Variant v : {Variant::general, Variant::pairwise}) {
      const auto cfg = config_for(v, 0.3 + 0.02 * trial);
      auto p = BoundProfile::zeros(model, v);
      for (int t = 0; t < 25; ++t) {
        const auto next = v == Variant::general ? general_update(p, parts, cfg) : pairwise_update(p, model, cfg);
        for (std::size_t i = 0; i < model.size(); ++i)
          for (std::size_t k = 0; k < p.tables[i].size(); ++k)
            ASSERT_GE(next.tables[i][k], p.tables[i][k] - 1e-9);
        p = next;
        std::size_t idx = 0;
        testing::for_each_assignment(model, [&](const Assignment& x) {
          double sum = model.shift();
          for (std::size_t i = 0; i < x.size(); ++i) sum += p.tables[i][x[i]];
          ASSERT_LE(sum, landscape[idx++] + 1e-9);
        });
      }
    }
  }
}

TEST(Properties, CertificatesAreSound) {
  std::mt19937_64 rng(29);
  int certified = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = testing::random_instance(rng);
    const auto best = oracle::enumerate(model);
    for (Variant v : {Variant::pairwise, Variant::offset}) {
      const auto report = solve_discrete(model, config_for(v));
      EXPECT_LE(report.certificate.lower_bound, best.energy + 1e-9);
      if (report.certificate.certified) {
        ++certified;
        EXPECT_NEAR(report.certificate.upper_bound, best.energy, 1e-9);
      }
    }
  }
  EXPECT_GT(certified, 0);
}

}  // namespace
}  // namespace coopt

namespace coopt {
namespace {

// The offset rule is the alpha rule up to per-variable constants, so the two
// certify the same instances.
TEST(Properties, OffsetCertifiesLikeAlpha) {
  std::mt19937_64 rng(71);
  int certified = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto model = testing::random_instance(rng);
    const auto a = solve_discrete(model, config_for(Variant::alpha, 0.9));
    const auto o = solve_discrete(model, config_for(Variant::offset, 0.9));
    ASSERT_TRUE(o.converged);
    EXPECT_EQ(a.certificate.certified, o.certificate.certified) << "trial " << trial;
    EXPECT_NEAR(a.certificate.lower_bound, o.certificate.lower_bound, 1e-9);
    certified += o.certificate.certified;
  }
  EXPECT_GT(certified, 0);
}

}  // namespace
}  // namespace coopt
