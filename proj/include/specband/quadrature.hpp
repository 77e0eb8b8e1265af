#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "specband/error.hpp"

namespace specband {

struct NodesWeights {
  std::vector<double> x;
  std::vector<double> w;
  size_t size() const { return x.size(); }
};

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline NodesWeights gauss_legendre_uncached(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "quadrature", "gauss_legendre", "n must be >= 1");
  NodesWeights r;
  r.x.resize(n);
  r.w.resize(n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
    }
    double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

inline const NodesWeights& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, NodesWeights> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre_uncached(n)).first;
  return it->second;
}

// Composite Gauss-Legendre with equal panels on [a, b].
inline NodesWeights composite_gauss_legendre(double a, double b, int panels, int points_per_panel) {
  const NodesWeights& base = gauss_legendre(points_per_panel);
  NodesWeights r;
  r.x.reserve(static_cast<size_t>(panels) * points_per_panel);
  r.w.reserve(r.x.capacity());
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    for (int k = 0; k < points_per_panel; ++k) {
      r.x.push_back(lo + 0.5 * h * (base.x[k] + 1.0));
      r.w.push_back(0.5 * h * base.w[k]);
    }
  }
  return r;
}

template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
  const NodesWeights& q = gauss_legendre(n);
  double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
  for (int i = 0; i < n; ++i) s += q.w[i] * f(c + h * q.x[i]);
  return s * h;
}

// Double-exponential rule on [a, b]. f receives (x, x - a, b - x) so that
// endpoint singularities can use the accurately computed distances.
template <class F>
double tanh_sinh(F&& f, double a, double b, double tol = 1e-14, int max_level = 9) {
  const double half_pi = 0.5 * std::numbers::pi;
  const double d = 0.5 * (b - a);
  const double tmax = 4.0;
  auto term = [&](double t) {
    double s = half_pi * std::sinh(t);
    double ch = std::cosh(s);
    double e = std::exp(-std::abs(2.0 * s));
    // distance from the nearer endpoint, scaled: 1 - |tanh s| = 2e/(1+e)
    double comp = 2.0 * e / (1.0 + e);
    double wt = d * half_pi * std::cosh(t) / (ch * ch);
    if (!(wt > 0.0) || comp * d <= 0.0) return 0.0;
    double da, db;
    if (s >= 0) {
      db = d * comp;
      da = 2.0 * d - db;
    } else {
      da = d * comp;
      db = 2.0 * d - da;
    }
    double x = s >= 0 ? b - db : a + da;
    return wt * f(x, da, db);
  };
  double h = 1.0;
  double sum = term(0.0);
  for (int k = 1; k * h <= tmax; ++k) sum += term(k * h) + term(-k * h);
  double prev = sum * h;
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    double add = 0.0;
    for (int k = 1; k * h <= tmax; k += 2) add += term(k * h) + term(-k * h);
    sum += add;
    double cur = sum * h;
    if (level >= 3 && std::abs(cur - prev) <= tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

// Integral over [a, b] of a density with square-root type edge behaviour.
// The substitution x = c + h cos(phi) gives the integrand g(phi) = f(x) * h sin(phi);
// the caller supplies g directly as a function of (phi, x).
template <class G>
double integrate_arcsine(G&& g, double a, double b, int n) {
  const NodesWeights& q = gauss_legendre(n);
  const double pi = std::numbers::pi;
  double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
  for (int i = 0; i < n; ++i) {
    double phi = 0.5 * pi * (q.x[i] + 1.0);
    s += q.w[i] * g(phi, c + h * std::cos(phi));
  }
  return 0.5 * pi * s;
}

}  // namespace specband
