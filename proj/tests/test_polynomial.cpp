#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "specband/polynomial.hpp"
#include "specband/quadrature.hpp"

using namespace specband;

TEST(Polynomial, EvalAndDerivative) {
  Polynomial p{-5.0, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(p(2.0), -1.0);
  EXPECT_EQ(p.derivative().degree(), 1);
  EXPECT_DOUBLE_EQ(p.derivative()(3.0), 6.0);
  Polynomial sq = p * p;
  EXPECT_EQ(sq.degree(), 4);
  EXPECT_DOUBLE_EQ(sq(1.0), 16.0);
}

TEST(Polynomial, RootsOfProduct) {
  // (x+3)(x+1)(x-0.5)(x-2)
  Polynomial p = Polynomial{3.0, 1.0} * Polynomial{1.0, 1.0} * Polynomial{-0.5, 1.0} * Polynomial{-2.0, 1.0};
  auto r = real_roots(p);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_NEAR(r[0], -3.0, 1e-13);
  EXPECT_NEAR(r[1], -1.0, 1e-13);
  EXPECT_NEAR(r[2], 0.5, 1e-13);
  EXPECT_NEAR(r[3], 2.0, 1e-13);
}

TEST(Polynomial, ComplexRootsAreSkipped) {
  Polynomial p{1.0, 0.0, 1.0};
  EXPECT_TRUE(real_roots(p).empty());
}

TEST(Polynomial, TouchingRootReportedTwice) {
  Polynomial p = Polynomial{-1.0, 1.0} * Polynomial{-1.0, 1.0} * Polynomial{2.0, 1.0};
  auto r = real_roots(p);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[0], -2.0, 1e-13);
  EXPECT_NEAR(r[1], 1.0, 1e-9);
  EXPECT_NEAR(r[2], 1.0, 1e-9);
}

TEST(Quadrature, GaussLegendreExactness) {
  for (int n : {1, 2, 5, 20, 64}) {
    auto q = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += q.w[i] * std::pow(q.x[i], k);
      double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, TanhSinhEndpointSingularities) {
  double a = tanh_sinh([](double, double da, double) { return std::log(da); }, 0.0, 1.0);
  EXPECT_NEAR(a, -1.0, 1e-12);
  double b = tanh_sinh([](double, double da, double db) { return 1.0 / std::sqrt(da * db); }, -1.0, 1.0);
  EXPECT_NEAR(b, std::numbers::pi, 1e-12);
}

TEST(Quadrature, ArcsineSubstitution) {
  // integral of (1 - x^2)^(-1/2) x^2 over [-1, 1] is pi/2
  double v = integrate_arcsine([](double, double x) { return x * x; }, -1.0, 1.0, 40);
  EXPECT_NEAR(v, std::numbers::pi / 2, 1e-13);
}
