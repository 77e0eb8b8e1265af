#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "specband/equilibrium.hpp"

using namespace specband;

namespace {
const double pi = std::numbers::pi;
Potential semicircle() { return Potential::square({0.0, -1.0}, 1.0); }
Potential quartic() { return Potential::square({-5.0, 0.0, 1.0}, 1.0); }
Potential cubic() { return Potential::square({0.3, -4.0, 0.0, 1.0}, 0.7); }

double density_at(const EquilibriumResult& r, double x) {
  const auto& m = r.measure;
  for (size_t i = 0; i + 1 < m.size(); ++i)
    if (m.nodes[i] <= x && x <= m.nodes[i + 1]) {
      double t = (x - m.nodes[i]) / (m.nodes[i + 1] - m.nodes[i]);
      return (1 - t) * m.density(i) + t * m.density(i + 1);
    }
  return 0.0;
}
}  // namespace

TEST(Equilibrium, FixedSupportInterval) {
  auto r = minimize_fixed_support(BandSet({-2.0, 2.0}), 400);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.el_residual_sup, 5e-3);
  // cell straddling the midpoint region
  size_t i = 200;
  double expect = r.measure.width(i) / (2 * pi);
  EXPECT_NEAR(r.measure.weights[i] / expect, 1.0, 0.02);
  EXPECT_NEAR(r.lagrange_constant, 0.0, 5e-3);
  EXPECT_TRUE(frequencies(r).values.empty());
}

TEST(Equilibrium, FixedSupportTwoBands) {
  BandSet s({-std::sqrt(7.0), -std::sqrt(3.0), std::sqrt(3.0), std::sqrt(7.0)});
  auto r = minimize_fixed_support(s, 300);
  ASSERT_EQ(r.support.q(), 2u);
  auto f = frequencies(r);
  ASSERT_EQ(f.values.size(), 1u);
  EXPECT_NEAR(f.values[0], 0.5, 1e-3);
  // capacity of the square-class spectrum: l_sigma = log(g)/q = 0
  EXPECT_NEAR(r.lagrange_constant, robin_support(quartic()), 5e-3);
}

TEST(Equilibrium, SemicircleExternalField) {
  auto r = minimize_external_field(semicircle(), 3.0, 2000);
  double h = 6.0 / 2000;
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(density_at(r, 0.0), 1.0 / pi, 2e-3);
  ASSERT_EQ(r.support.q(), 1u);
  EXPECT_NEAR(r.support.lower(), -2.0, 2 * h);
  EXPECT_NEAR(r.support.upper(), 2.0, 2 * h);
  EXPECT_NEAR(r.lagrange_constant, robin_external(semicircle()), 2e-3);
  EXPECT_LE(r.el_residual_sup, 5e-3);
  EXPECT_GE(r.el_min_slack, -5e-3);
  // even V gives a symmetric measure
  for (size_t i = 0; i < 1000; ++i) EXPECT_NEAR(r.measure.weights[i], r.measure.weights[1999 - i], 5e-3 / 2000);
}

TEST(Equilibrium, QuarticTwoBands) {
  auto r = minimize_external_field(quartic(), 3.2, 2000);
  double h = 6.4 / 2000;
  ASSERT_EQ(r.support.q(), 2u);
  double e[4] = {-std::sqrt(7.0), -std::sqrt(3.0), std::sqrt(3.0), std::sqrt(7.0)};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(r.support.edges()[k], e[k], 2 * h);
  auto b = frequencies(r);
  EXPECT_NEAR(b.values[0], 0.5, 2e-3);
  EXPECT_NEAR(r.lagrange_constant, robin_external(quartic()), 2e-3);
}

TEST(Equilibrium, EnergyMonotone) {
  auto r = minimize_external_field(quartic(), 3.2, 1000);
  for (size_t k = 1; k < r.energy_history.size(); ++k)
    EXPECT_LE(r.energy_history[k], r.energy_history[k - 1] + 1e-14 * std::abs(r.energy_history[k - 1]));
}

TEST(Equilibrium, GridRefinement) {
  auto r1 = minimize_external_field(semicircle(), 3.0, 1000);
  auto r2 = minimize_external_field(semicircle(), 3.0, 2000);
  EXPECT_LT(std::abs(r2.lagrange_constant - r1.lagrange_constant), 0.5 * r1.el_residual_sup);
}

TEST(Equilibrium, AsymmetricCubicFrequencies) {
  // External-field support, then the fixed-support measure on it: its frequencies
  // must match the comb-map values (q - l)/q.
  Potential V = cubic();
  auto bs = bands_from_polynomial(V);
  auto r = minimize_external_field(V, bs.upper() + 0.6, 2000);
  ASSERT_EQ(r.support.q(), 3u);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(r.support.edges()[k], bs.edges()[k], 2 * r.measure.width(0));
  auto beta = frequencies(r);
  auto fix = minimize_fixed_support(r.support, 300);
  auto alpha = frequencies(fix);
  ASSERT_EQ(alpha.values.size(), 2u);
  for (size_t l = 0; l < 2; ++l) {
    double comb = counting_functions(V, bs.a(l + 1)).nu;
    EXPECT_NEAR(comb, (2.0 - l) / 3.0, 1e-7);
    EXPECT_NEAR(alpha.values[l], comb, 2e-3);
    EXPECT_NEAR(beta.values[l], comb, 2e-3);
  }
  EXPECT_NEAR(r.lagrange_constant, robin_external(V), 2e-3);
}

TEST(Equilibrium, ResidualOfExactMeasures) {
  auto m = discretize(N_measure(semicircle()), -3.0, 3.0, 2000);
  auto e = el_residual(m, semicircle());
  EXPECT_LE(e.sup_on_support, 1e-3);
  EXPECT_GE(e.min_slack_off_support, -1e-3);
  EXPECT_NEAR(e.lagrange_constant, -1.0, 1e-3);

  auto mq = discretize(N_measure(quartic()), -3.2, 3.2, 2000);
  auto eq = el_residual(mq, quartic());
  EXPECT_LE(eq.sup_on_support, 1e-3);
  EXPECT_GE(eq.min_slack_off_support, -1e-3);

  auto mu = DiscreteMeasure::uniform_grid(-2.0, 2.0, 1000);
  EXPECT_GT(el_residual(mu, semicircle()).sup_on_support, 0.05);
}

TEST(Equilibrium, DomainTooSmall) {
  try {
    minimize_external_field(semicircle(), 1.5, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainTooSmall);
  }
}

TEST(Equilibrium, NoConvergenceCarriesPartialResult) {
  SolverParams P;
  P.max_iterations = 3;
  try {
    minimize_external_field(quartic(), 3.2, 1000, P);
    FAIL();
  } catch (const NoConvergenceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
    EXPECT_FALSE(e.partial().converged);
    EXPECT_EQ(e.partial().measure.size(), 1000u);
  }
}

TEST(Equilibrium, NnuIdentity) {
  EXPECT_LE(check_nnu(semicircle(), 1.0, 32), 1e-3);
  EXPECT_LE(check_nnu(quartic(), 1.0, 32), 1e-3);
  EXPECT_LE(check_nnu(cubic(), 0.7, 32), 1e-3);
}

TEST(Equilibrium, SmallAmplitudeShrinksSupports) {
  Potential V = quartic();
  auto b1 = bands_from_polynomial(V.with_amplitude(1.0));
  auto b2 = bands_from_polynomial(V.with_amplitude(1e-4));
  EXPECT_LT(b2.total_length(), 0.05 * b1.total_length());
  EXPECT_NEAR(b2.a(1), std::sqrt(5.0), 0.01);
}
