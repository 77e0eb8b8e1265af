#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specband/rmt.hpp"

using namespace specband;

namespace {
const double pi = std::numbers::pi;
Potential gauss() { return Potential::square({0.0, 1.0}, 1.0); }
Potential quartic() { return Potential::square({-5.0, 0.0, 1.0}, 1.0); }

MCParams params(long sweeps, int thin, std::uint64_t seed = 1) {
  MCParams P;
  P.sweeps = sweeps;
  P.thin = thin;
  P.seed = seed;
  P.workers = 4;
  return P;
}

std::vector<double> pooled(const EnsembleSample& S) {
  std::vector<double> v;
  for (const auto& c : S.chains) v.insert(v.end(), c.configs.begin(), c.configs.end());
  std::sort(v.begin(), v.end());
  return v;
}

// sup |F_emp - F| over the sorted points
template <class F>
double ks_distance(const std::vector<double>& sorted, F&& cdf) {
  double d = 0;
  const double N = sorted.size();
  for (size_t i = 0; i < sorted.size(); ++i) {
    double F0 = cdf(sorted[i]);
    d = std::max({d, std::abs(F0 - i / N), std::abs(F0 - (i + 1) / N)});
  }
  return d;
}

double semicircle_cdf(double x) {
  if (x <= -2) return 0;
  if (x >= 2) return 1;
  return 0.5 + (x * std::sqrt(4 - x * x) / 4 + std::asin(x / 2)) / pi;
}

// simple composite Simpson rule
template <class F>
auto simpson(F&& f, double a, double b, int m = 4000) {
  double h = (b - a) / m;
  auto s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * (h / 3);
}
}  // namespace

TEST(Rmt, SemicircleHistogram) {
  auto S = sample_loggas(gauss(), 64, params(10000, 25));
  auto v = pooled(S);
  ASSERT_GE(v.size(), 100000u);
  EXPECT_LE(ks_distance(v, semicircle_cdf), 2e-2);
  EXPECT_GT(S.acceptance(), 0.25);
  EXPECT_LT(S.acceptance(), 0.55);
  for (const auto& c : S.chains)
    for (size_t k = 0; k < S.per_chain(); ++k) EXPECT_TRUE(std::is_sorted(S.config(&c - S.chains.data(), k),
                                                                          S.config(&c - S.chains.data(), k) + 64));
}

TEST(Rmt, SingleEigenvalue) {
  auto S = sample_loggas(quartic(), 1, params(20000, 1));
  auto L = linear_statistic(S, TestFunction::polynomial({0.0, 1.0}));
  EXPECT_LE(std::abs(L.re.mean), 3 * L.re.stderr_);
}

TEST(Rmt, QuarticBandOccupation) {
  auto S = sample_loggas(quartic(), 64, params(10000, 5));
  auto L = linear_statistic(S, TestFunction::indicator(0.0, 1e9));
  EXPECT_LE(std::abs(L.re.mean - 0.5), 3 * L.re.stderr_ + 1e-15);
}

TEST(Rmt, LinearStatistics) {
  auto S = sample_loggas(gauss(), 64, params(10000, 5));
  auto one = linear_statistic(S, TestFunction::polynomial({1.0}));
  for (const auto& c : one.series)
    for (cplx v : c) EXPECT_EQ(v, cplx(1.0));

  // Stieltjes transform of the semicircle at z = i, by quadrature and against the frozen value
  cplx oracle = simpson([](double x) { return cplx(std::sqrt(std::max(0.0, 4 - x * x)) / (2 * pi)) / (x - cplx(0, 1)); },
                        -2.0, 2.0, 200000);
  const double frozen = 0.6180339887498949;
  EXPECT_NEAR(oracle.real(), 0.0, 1e-12);
  EXPECT_NEAR(oracle.imag(), frozen, 1e-8);
  auto st = linear_statistic(S, TestFunction::resolvent({0, 1}));
  EXPECT_NEAR(st.mean().imag(), frozen, 3 * st.im.stderr_ + 1.0 / (64.0 * 64.0));
  EXPECT_NEAR(st.mean().real(), 0.0, 3 * st.re.stderr_ + 1.0 / (64.0 * 64.0));

  auto tail = linear_statistic(S, TestFunction::indicator(2.5, 1e9));
  EXPECT_LE(tail.re.mean, 1e-2);
}

TEST(Rmt, MeanMatchesFiniteNDensity) {
  // E N_n[x^2] = n^{-1} int x^2 K_n(x, x) dx, from the orthonormal functions
  for (int n : {8, 16}) {
    auto R = auto_quadrature(quartic(), n, n);
    auto t = stieltjes_recurrence(quartic(), n, n, R);
    double exact = 0;
    for (size_t i = 0; i < R.size(); ++i) {
      double diag = 0;
      for (int l = 0; l < n; ++l) diag += std::pow(psi_eval(t, l, R.x[i]), 2);
      exact += R.plain[i] * R.x[i] * R.x[i] * diag / n;
    }
    auto S = sample_loggas(quartic(), n, params(20000, 2, 9));
    auto L = linear_statistic(S, TestFunction::polynomial({0, 0, 1}));
    EXPECT_LE(std::abs(L.re.mean - exact), 3 * L.re.stderr_) << n << " " << L.re.mean << " " << exact;
  }
}

TEST(Rmt, MeanConvergesWithN) {
  cplx s_i(0, 0.6180339887498949);
  double err[2];
  int k = 0;
  for (int n : {16, 64}) {
    auto S = sample_loggas(gauss(), n, params(20000, 2, 3));
    err[k++] = std::abs(linear_statistic(S, TestFunction::resolvent({0, 1})).mean() - s_i);
  }
  EXPECT_LT(err[1], err[0]);
}

TEST(Rmt, SeededDeterminism) {
  MCParams P = params(10000, 10, 42);
  auto a = sample_loggas(quartic(), 12, P);
  P.workers = 1;
  auto b = sample_loggas(quartic(), 12, P);
  ASSERT_EQ(a.chains.size(), b.chains.size());
  for (size_t c = 0; c < a.chains.size(); ++c) EXPECT_TRUE(a.chains[c].configs == b.chains[c].configs);
  EXPECT_FALSE(a.chains[0].configs == a.chains[1].configs);
  P.seed = 43;
  EXPECT_FALSE(sample_loggas(quartic(), 12, P).chains[0].configs == a.chains[0].configs);
}

TEST(Rmt, DetailedBalanceTwoEigenvalues) {
  // n = 2, V = x^2/2: one-point density (x^2 + 1/2) e^{-x^2} / sqrt(pi)
  auto rho = [](double x) { return (x * x + 0.5) * std::exp(-x * x) / std::sqrt(pi); };
  EXPECT_NEAR(simpson(rho, -12.0, 12.0), 1.0, 1e-12);
  auto cdf = [&](double x) { return x <= -12 ? 0.0 : simpson(rho, -12.0, x, 400); };
  auto S = sample_loggas(gauss(), 2, params(50000, 2));
  auto v = pooled(S);
  std::vector<double> sub;
  for (size_t i = 0; i < v.size(); i += 10) sub.push_back(v[i]);
  EXPECT_LE(ks_distance(sub, cdf), 2e-2);
}

TEST(Rmt, CovarianceConstantIsZero) {
  auto rows = covariance_scaling(gauss(), TestFunction::polynomial({1.0}), TestFunction::resolvent({0, 2}), {16},
                                 params(10000, 5));
  EXPECT_EQ(rows[0].cov, cplx(0.0));
  EXPECT_EQ(rows[0].stderr_, 0.0);
}

TEST(Rmt, CovarianceOrderNSquared) {
  auto f1 = TestFunction::resolvent({0, 2}), f2 = TestFunction::resolvent({0, -2});
  auto rows = covariance_scaling(gauss(), f1, f2, {16, 32}, params(10000, 5));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GE(rows[1].ratio_to_previous, 0.5);
  EXPECT_LE(rows[1].ratio_to_previous, 2.0);
}

TEST(Rmt, CovarianceMatchesKernelFormula) {
  auto f1 = TestFunction::resolvent({0, 2}), f2 = TestFunction::resolvent({0, -2});
  const int n = 16;
  cplx kern = covariance_kernel(gauss(), n, f1, f2);
  EXPECT_GT(kern.real(), 0.0);
  EXPECT_NEAR(kern.imag(), 0.0, 1e-12);
  auto S = sample_loggas(gauss(), n, params(40000, 5));
  auto e = covariance(linear_statistic(S, f1), linear_statistic(S, f2));
  EXPECT_LE(std::abs(e.cov - kern), 3 * e.stderr_) << e.cov << " " << kern << " " << e.stderr_;
  // constant function gives zero by the pair form
  EXPECT_EQ(covariance_kernel(gauss(), n, TestFunction::polynomial({1.0}), f2), cplx(0.0));
}

TEST(Rmt, GapProbabilityLimits) {
  EXPECT_EQ(gap_probability(gauss(), 8, 0.3, 0.3).value, 1.0);
  EXPECT_EQ(gap_probability(gauss(), 8, 0.5, 0.1).value, 1.0);
  EXPECT_LE(gap_probability(gauss(), 8, -10, 10).value, 1e-10);
  try {
    gap_probability(gauss(), 8, -1, 1, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(Rmt, GapProbabilityProperties) {
  // nested intervals around a point inside the spectrum
  for (auto [V, c] : {std::pair{gauss(), 0.3}, std::pair{quartic(), 2.2}}) {
    double prev = 1.0;
    for (double h : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0}) {
      auto G = gap_probability(V, 10, c - h, c + h);
      EXPECT_LE(G.value, prev + 1e-14);
      EXPECT_LT(G.value, 1.0);
      prev = G.value;
      EXPECT_LE(std::abs(G.value - gap_probability(V, 10, c - h, c + h, 80).value), 1e-8);
    }
    EXPECT_LT(prev, 0.5);
  }
}

TEST(Rmt, GapProbabilityMatchesMonteCarlo) {
  auto G = gap_probability(gauss(), 8, -0.25, 0.25);
  auto S = sample_loggas(gauss(), 8, params(25000, 1));
  ASSERT_GE(S.total(), 100000u);
  auto f = empty_interval_frequency(S, -0.25, 0.25);
  EXPECT_LE(std::abs(f.mean - G.value), 3 * f.stderr_) << f.mean << " " << G.value << " " << f.stderr_;
}

TEST(Rmt, FunctionalCorrespondence) {
  auto C = functional_correspondence(gauss(), TestFunction::polynomial({0, 0, 1}), 64, 32, params(10000, 5));
  EXPECT_NEAR(C.rhs.real(), 1.0, 1e-10);
  EXPECT_NEAR(C.rhs_direct.real(), 1.0, 1e-10);
  EXPECT_LE(std::abs(C.lhs - C.rhs), 3 * C.lhs_stderr);

  auto one = functional_correspondence(gauss(), TestFunction::polynomial({1.0}), 16, 8, params(10000, 5));
  EXPECT_EQ(one.lhs, cplx(1.0));
  EXPECT_NEAR(one.rhs.real(), 1.0, 1e-12);

  auto Q = functional_correspondence(quartic(), TestFunction::polynomial({0, 0, 1}), 64, 32, params(10000, 5));
  // quadrature oracle for int x^2 rho_g on the two bands
  const double a = std::sqrt(3.0), b = std::sqrt(7.0);
  auto dens = [](double x) {
    return std::abs(2 * x) * std::sqrt(std::max(0.0, (x * x - 3) * (7 - x * x))) / (2 * pi * 2);
  };
  double oracle = 2 * simpson([&](double x) { return x * x * dens(x); }, a, b, 200000);
  EXPECT_NEAR(Q.rhs.real(), oracle, 1e-6);
  EXPECT_NEAR(Q.rhs_direct.real(), oracle, 1e-6);
  EXPECT_LE(std::abs(Q.lhs - Q.rhs), 3 * Q.lhs_stderr) << Q.lhs << " " << Q.rhs << " " << Q.lhs_stderr;
}

TEST(Rmt, VarianceFormulaClosedForm) {
  // free operator: G_jk(z) = (2 pi)^{-1} int cos((j-k) t) / (2 cos t - z) dt
  auto G = [](int d, cplx z) {
    const int m = 4096;
    cplx s = 0;
    for (int i = 0; i < m; ++i) {
      double t = 2 * pi * i / m;
      s += std::cos(d * t) / (2 * std::cos(t) - z);
    }
    return s / double(m);
  };
  cplx z1(0, 1), z2(0, -1);
  auto dq = [&](int d) { return (G(d, z1) - G(d, z2)) / (z1 - z2); };
  cplx oracle = dq(0) * dq(0) - dq(1) * dq(1);
  EXPECT_NEAR(oracle.real(), 0.2, 1e-12);  // frozen
  EXPECT_NEAR(oracle.imag(), 0.0, 1e-14);
  cplx v = variance_formula_eval(gauss(), z1, z2);
  EXPECT_LT(std::abs(v - oracle), 1e-10) << v << " " << oracle;
  EXPECT_LT(std::abs(variance_formula_eval(gauss(), z1, z2, 1) - v), 1e-12);
}

TEST(Rmt, VarianceFormulaConfluent) {
  cplx z(0.3, 1.0);
  cplx c = variance_formula_eval(quartic(), z, z);
  double prev = 1e9;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    double d = std::abs(variance_formula_eval(quartic(), z, z + eps) - c);
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(Rmt, VarianceFormulaVsMonteCarlo) {
  const int n = 64;
  cplx z1(0, 1), z2(0, -1);
  cplx f = variance_formula_eval(gauss(), z1, z2);
  auto S = sample_loggas(gauss(), n, params(10000, 5));
  auto e = covariance(linear_statistic(S, TestFunction::resolvent(z1)), linear_statistic(S, TestFunction::resolvent(z2)));
  double ratio = std::abs(double(n * n) * e.cov) / std::abs(f);
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 2.0);
}

TEST(Rmt, Preconditions) {
  for (auto bad : {std::pair<int, long>{0, 10000}, {300, 10000}, {8, 500}}) {
    try {
      sample_loggas(gauss(), bad.first, params(bad.second, 1));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
  }
  try {
    covariance_scaling(gauss(), TestFunction::resolvent({0, 1}), TestFunction::resolvent({0, 1}), {4}, params(10000, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}
