#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "specband/equilibrium.hpp"
#include "specband/orthopoly.hpp"
#include "specband/riemann.hpp"

using namespace specband;

namespace {
const double s7 = std::sqrt(7.0), s3 = std::sqrt(3.0);
BandSet quartic_bands() { return BandSet({-s7, -s3, s3, s7}); }
Potential cubic() { return Potential::square({0.3, -4.0, 0.0, 1.0}, 0.7); }

SurfaceData manual_genus1(double im_tau) {
  SurfaceData S;
  S.genus = 1;
  S.im_tau = Eigen::MatrixXd::Constant(1, 1, im_tau);
  S.min_eig_im_tau = im_tau;
  S.U = {0.5};
  S.u_inf = {-0.25};
  return S;
}
}  // namespace

TEST(Riemann, GenusZero) {
  auto S = surface_from_bands(BandSet({-2.0, 2.0}));
  EXPECT_EQ(S.genus, 0);
  EXPECT_NEAR(S.l_sigma, 0.0, 1e-15);
  EXPECT_NEAR(coefficient_map_R(S, {}), 1.0, 1e-15);
  EXPECT_EQ(rie_relation_check(S), 0.0);
  double g = 0.3;
  auto Sg = surface_from_bands(BandSet({-2 * std::sqrt(g), 2 * std::sqrt(g)}));
  EXPECT_NEAR(coefficient_map_R(Sg, {}), g, 1e-15);
}

TEST(Riemann, SymmetricGenusOne) {
  auto S = surface_from_bands(quartic_bands());
  ASSERT_EQ(S.genus, 1);
  EXPECT_NEAR(S.U[0], 0.5, 1e-12);
  EXPECT_NEAR(S.U[0], counting_functions(Potential::square({-5.0, 0.0, 1.0}, 1.0), s3).nu, 1e-8);
  EXPECT_NEAR(S.l_sigma, 0.0, 1e-12);
  EXPECT_GT(S.min_eig_im_tau, 0.0);
  EXPECT_LE(rie_relation_check(S), 1e-8);
}

TEST(Riemann, AsymmetricCases) {
  for (auto edges : std::vector<std::vector<double>>{{-3, -1, 0, 2}, {-3, -1, 0, 3}}) {
    auto S = surface_from_bands(BandSet(edges));
    EXPECT_LE(rie_relation_check(S), 1e-7);
    EXPECT_GT(S.U[0], 0.0);
    EXPECT_LT(S.U[0], 1.0);
  }
  // harmonic measure of the longer right band exceeds 1/2
  EXPECT_GT(surface_from_bands(BandSet({-3, -1, 0, 3})).U[0], 0.5);
}

TEST(Riemann, CubicGenusTwo) {
  Potential V = cubic();
  auto bs = bands_from_polynomial(V);
  auto S = surface_from_bands(bs);
  ASSERT_EQ(S.genus, 2);
  for (int l = 0; l < 2; ++l) EXPECT_NEAR(S.U[l], counting_functions(V, bs.a(l + 1)).nu, 1e-8);
  EXPECT_NEAR(S.l_sigma, robin_support(V), 1e-10);
  EXPECT_LE(rie_relation_check(S), 1e-7);
  EXPECT_LE(S.tau_asymmetry, 1e-10);
  EXPECT_GT(S.min_eig_im_tau, 0.0);

  auto fix = minimize_fixed_support(bs, 300);
  auto alpha = frequencies(fix);
  for (int l = 0; l < 2; ++l) EXPECT_NEAR(S.U[l], alpha.values[l], 2e-3);
}

TEST(Riemann, QuadratureConverged) {
  for (const BandSet& b : {BandSet({-3, -1, 0, 3}), bands_from_polynomial(cubic())}) {
    auto S1 = surface_from_bands(b, 64);
    auto S2 = surface_from_bands(b, 128);
    EXPECT_LT((S1.im_tau - S2.im_tau).cwiseAbs().maxCoeff(), 1e-9);
    for (int i = 0; i < S1.genus; ++i) {
      EXPECT_LT(std::abs(S1.U[i] - S2.U[i]), 1e-9);
      EXPECT_LT(std::abs(S1.u_inf[i] - S2.u_inf[i]), 1e-9);
    }
    EXPECT_LT(std::abs(S1.l_sigma - S2.l_sigma), 1e-9);
  }
}

TEST(Riemann, ThetaSeries) {
  auto S = manual_genus1(1.0);
  double oracle = 0;
  for (int m = -10; m <= 10; ++m) oracle += std::exp(-std::numbers::pi * m * m);
  auto t = theta({0.0}, S);
  EXPECT_NEAR(t.value.real(), oracle, 1e-14);
  EXPECT_NEAR(t.value.real(), 1.0864348112133080, 1e-14);
  EXPECT_LT(t.tail_bound, 1e-13 * std::abs(t.value));
  try {
    theta({0.0}, manual_genus1(1e-5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivergentTruncation);
  }
}

TEST(Riemann, ThetaSymmetries) {
  auto S = surface_from_bands(bands_from_polynomial(cubic()));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x = {u(rng), u(rng)};
    auto t = theta(x, S).value;
    EXPECT_LT(std::abs(theta({-x[0], -x[1]}, S).value - t), 1e-12);
    EXPECT_LT(std::abs(theta({x[0] + 1, x[1]}, S).value - t), 1e-12);
    EXPECT_LT(std::abs(theta({x[0], x[1] - 1}, S).value - t), 1e-12);
    double R = coefficient_map_R(S, x);
    EXPECT_GT(R, 0.0);
  }
}

TEST(Riemann, TelescopingIdentity) {
  auto S = surface_from_bands(bands_from_polynomial(cubic()));
  std::vector<double> a = S.U, x = {0.13, 0.71};
  int p = 3;
  auto th = [&](double k) {
    return theta({x[0] + k * a[0], x[1] + k * a[1]}, S).value;
  };
  std::complex<double> lhs = 0;
  for (int k = 0; k < p; ++k) lhs += std::log(th(k + 1) * th(k - 1) / (th(k) * th(k)));
  std::complex<double> rhs = std::log(th(p) * th(-1) / (th(0) * th(p - 1)));
  EXPECT_NEAR(lhs.real(), rhs.real(), 1e-10);
}

TEST(Riemann, ShiftFitClosedForm) {
  auto S = surface_from_bands(quartic_bands());
  double hi = 0.5 * (s7 + s3), lo = 0.5 * (s7 - s3);
  auto f = shift_equivalence_fit(S, {hi, lo, hi, lo, hi, lo});
  EXPECT_LE(f.residual, 1e-6);
  try {
    shift_equivalence_fit(S, {2 * hi, 2 * lo, 2 * hi, 2 * lo});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PoorFit);
  }
}

TEST(Riemann, ShiftFitOrthopolyWindow) {
  auto S = surface_from_bands(quartic_bands());
  Potential V = Potential::square({-5.0, 0.0, 1.0}, 1.0);
  double prev = 1e9;
  for (int n : {20, 40, 60}) {
    auto t = recurrence(V, n, n + 6);
    std::vector<double> targets(t.r.begin() + n, t.r.begin() + n + 6);
    double res = shift_equivalence_fit(S, targets).residual;
    EXPECT_LT(res, prev);
    prev = res;
  }
  EXPECT_LE(prev, 5e-2);
}
