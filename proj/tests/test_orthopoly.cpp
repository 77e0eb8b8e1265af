#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "specband/orthopoly.hpp"

using namespace specband;

namespace {
const double pi = std::numbers::pi;
Potential gauss(double g = 1.0) { return Potential::square({0.0, -1.0}, g); }
Potential quartic() { return Potential::square({-5.0, 0.0, 1.0}, 1.0); }

double integrate_rule(const QuadratureRule& R, auto&& f) {
  double s = 0;
  for (size_t i = 0; i < R.size(); ++i) s += R.plain[i] * f(R.x[i]);
  return s;
}
}  // namespace

TEST(Orthopoly, QuadratureGaussianIntegral) {
  auto R = build_quadrature(gauss(), 10, 6.0, 20, 40);
  EXPECT_LE(R.moment_self_test(), 1e-12);
  EXPECT_NEAR(std::exp(R.log_mass()), std::sqrt(pi / 5), 1e-12);
  try {
    build_quadrature(gauss(), 10, 6.0, 1, 40);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  try {
    build_quadrature(gauss(), 10, 1.5, 20, 40);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncationTooTight);
  }
}

TEST(Orthopoly, PanelDoublingStable) {
  auto R1 = build_quadrature(gauss(), 40, 6.0, 20, 50);
  auto R2 = build_quadrature(gauss(), 40, 6.0, 20, 100);
  auto t1 = stieltjes_recurrence(gauss(), 40, 10, R1);
  auto t2 = stieltjes_recurrence(gauss(), 40, 10, R2);
  EXPECT_LT(std::abs(t1.r[0] - t2.r[0]), 1e-12);
}

TEST(Orthopoly, HermiteScaling) {
  auto t = recurrence(gauss(), 40, 60);
  for (int l = 0; l <= 60; ++l) {
    EXPECT_NEAR(t.r[l], std::sqrt((l + 1.0) / 40), 1e-10);
    EXPECT_NEAR(t.s[l], 0.0, 1e-10);
  }
  // r_n^{(n)} -> sqrt(g)
  EXPECT_LT(std::abs(recurrence(gauss(), 80, 80).r[80] - 1.0), std::abs(t.r[40] - 1.0));
}

TEST(Orthopoly, QuarticPeriodTwo) {
  auto t = recurrence(quartic(), 60, 70);
  double hi = 0.5 * (std::sqrt(7.0) + std::sqrt(3.0)), lo = 0.5 * (std::sqrt(7.0) - std::sqrt(3.0));
  for (int k = -5; k <= 5; ++k) {
    double r = t.r[60 + k];
    double expect = (std::abs(r - hi) < std::abs(r - lo)) ? hi : lo;
    EXPECT_NEAR(r, expect, 5e-2);
    double r2 = t.r[60 + k + 1];
    EXPECT_NEAR(std::abs(r - r2), hi - lo, 1e-1);
  }
  for (int l = 0; l <= 70; ++l) {
    EXPECT_NEAR(t.s[l], 0.0, 1e-10);
    EXPECT_GT(t.r[l], 0.0);
  }
}

TEST(Orthopoly, ScalingIdentity) {
  EXPECT_LE(scaling_identity_check(gauss(), 40, 20), 1e-10);
  EXPECT_EQ(scaling_identity_check(gauss(), 40, 40), 0.0);
  EXPECT_LE(scaling_identity_check(quartic(), 40, 30), 1e-8);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> nd(10, 60);
  std::uniform_real_distribution<double> gd(0.5, 2.0);
  for (int i = 0; i < 20; ++i) {
    int n = nd(rng);
    int l = std::uniform_int_distribution<int>(1, n)(rng);
    double g = gd(rng);
    EXPECT_LE(scaling_identity_check(Potential::square({-5.0, 0.0, 1.0}, g), n, l), 1e-8) << n << " " << l << " " << g;
  }
}

TEST(Orthopoly, PsiOrthonormality) {
  auto R = auto_quadrature(quartic(), 30, 26);
  auto t = stieltjes_recurrence(quartic(), 30, 26, R);
  std::vector<std::vector<double>> psi(26);
  for (int l = 0; l < 26; ++l)
    for (double x : R.x) psi[l].push_back(psi_eval(t, R, l, x));
  double worst = 0;
  for (int l = 0; l < 26; ++l)
    for (int m = 0; m < 26; ++m) {
      double s = 0;
      for (size_t i = 0; i < R.size(); ++i) s += R.plain[i] * psi[l][i] * psi[m][i];
      worst = std::max(worst, std::abs(s - (l == m ? 1.0 : 0.0)));
    }
  EXPECT_LE(worst, 1e-9);
}

TEST(Orthopoly, PsiGround) {
  int n = 12;
  auto t = recurrence(gauss(), n, 5);
  for (double x : {0.0, 0.7, -1.9}) {
    double expect = std::pow(n / (2 * pi), 0.25) * std::exp(-n * x * x / 4);
    EXPECT_NEAR(psi_eval(t, 0, x), expect, 1e-13);
  }
}

TEST(Orthopoly, PsiDecaysOutsideSpectrum) {
  auto t20 = recurrence(gauss(), 20, 20);
  auto t40 = recurrence(gauss(), 40, 40);
  double x = 3.0;
  EXPECT_LT(std::abs(psi_eval(t40, 40, x)) / std::abs(psi_eval(t20, 20, x)), 0.5);
}

TEST(Orthopoly, KernelIdentities) {
  int n = 40;
  auto R = auto_quadrature(gauss(), n, n);
  auto t = stieltjes_recurrence(gauss(), n, n, R);
  double x0 = 0.37;
  for (int l : {0, 5, 39}) {
    double s = integrate_rule(R, [&](double y) { return kernel(t, n, x0, y).sum_value * psi_eval(t, l, y); });
    EXPECT_NEAR(s, psi_eval(t, l, x0), 1e-8);
  }
  double trace = integrate_rule(R, [&](double y) { return kernel(t, n, y, y).value; });
  EXPECT_NEAR(trace, n, 1e-8);
  EXPECT_NEAR(density_rho_n(t, n, 0.0), 1 / pi, 5e-2);
  auto K = kernel(t, n, 0.2, 0.2 + 1e-8);
  EXPECT_EQ(K.method, KernelMethod::Confluent);
  EXPECT_NEAR(K.value, K.sum_value, 1e-8 * std::abs(K.sum_value));
}

TEST(Orthopoly, ChristoffelDarbouxMatchesSum) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int n : {10, 33, 60}) {
    auto t = recurrence(quartic(), n, n);
    for (int i = 0; i < 34; ++i) {
      double x = u(rng), y = u(rng);
      auto K = kernel(t, n, x, y);
      EXPECT_EQ(K.method, KernelMethod::ChristoffelDarboux);
      EXPECT_NEAR(K.value, K.sum_value, 1e-8);
      EXPECT_NEAR(kernel(t, n, y, x).value, K.value, 1e-12);
    }
  }
}

TEST(Orthopoly, CoefficientAsymptotics) {
  auto q1 = coefficient_asymptotics_check(gauss(), {40}, 0);
  EXPECT_NEAR(q1.rows[0].max_deviation, std::sqrt(41.0 / 40) - 1, 1e-10);
  auto q1w = coefficient_asymptotics_check(gauss(), {20, 40}, 1);
  EXPECT_LE(q1w.rows[1].max_deviation, 3e-2);
  EXPECT_TRUE(q1w.decreasing);
  auto q2 = coefficient_asymptotics_check(quartic(), {20, 40, 60}, 2);
  EXPECT_TRUE(q2.decreasing);
  EXPECT_LE(q2.rows[2].max_deviation, 5e-2);
}

TEST(Orthopoly, LimitsEnforced) {
  auto R = auto_quadrature(gauss(), 10, 30);
  try {
    stieltjes_recurrence(gauss(), 10, 31, R);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}
