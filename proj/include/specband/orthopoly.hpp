#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "specband/error.hpp"
#include "specband/jacobi.hpp"
#include "specband/polynomial.hpp"
#include "specband/potential.hpp"
#include "specband/quadrature.hpp"
#include "specband/recurrence_table.hpp"

namespace specband {

// Composite Gauss-Legendre rule on [-L, L] carrying the weight exp(-n (V - Vmin) / g).
struct QuadratureRule {
  Potential potential;
  int n = 0;
  double L = 0;
  int points_per_panel = 0;
  int panels = 0;
  std::vector<double> x;
  std::vector<double> plain;     // unweighted Gauss-Legendre weights
  std::vector<double> w;         // plain * exp(-n (V - Vmin) / g)
  double log_scale = 0;          // -n Vmin / g

  double g() const { return potential.g(); }
  size_t size() const { return x.size(); }

  // log of the integral of exp(-n V / g)
  double log_mass() const {
    double s = 0;
    for (double v : w) s += v;
    return log_scale + std::log(s);
  }

  // Max relative error of the unweighted moments of (x / L)^k, k < 2 * points_per_panel.
  double moment_self_test() const {
    double worst = 0;
    for (int k = 0; k < 2 * points_per_panel; ++k) {
      double s = 0;
      for (size_t i = 0; i < size(); ++i) s += plain[i] * std::pow(x[i] / L, k);
      double exact = k % 2 ? 0.0 : 2.0 * L / (k + 1);
      worst = std::max(worst, std::abs(s - exact) / (2.0 * L));
    }
    return worst;
  }
};

namespace detail {

inline double potential_minimum(const Potential& V) {
  const Polynomial& P = V.V();
  double best = std::numeric_limits<double>::infinity();
  for (double c : real_roots(P.derivative(), 1e-12)) best = std::min(best, P(c));
  return best;
}

// Smallest L with n (V(+-L) - Vmin) / g >= e_target; V is monotone beyond its critical points.
inline double auto_truncation(const Potential& V, int n, double e_target) {
  const double vmin = potential_minimum(V);
  auto ok = [&](double L) { return n * (std::min(V(L), V(-L)) - vmin) / V.g() >= e_target; };
  double lo = 0.0;
  for (double c : real_roots(V.V().derivative(), 1e-12)) lo = std::max(lo, std::abs(c));
  double hi = lo + 1.0;
  while (!ok(hi)) hi = lo + 2.0 * (hi - lo);
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

}  // namespace detail

inline QuadratureRule build_quadrature(const Potential& V, int n, double L, int points_per_panel, int panels) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "orthopoly", "build_quadrature", "n must be >= 1");
  if (points_per_panel < 2)
    throw Error(ErrorCode::InvalidArgument, "orthopoly", "build_quadrature", "points_per_panel must be >= 2");
  if (panels < 1 || !(L > 0))
    throw Error(ErrorCode::InvalidArgument, "orthopoly", "build_quadrature", "need panels >= 1 and L > 0");
  QuadratureRule R;
  R.potential = V;
  R.n = n;
  R.L = L;
  R.points_per_panel = points_per_panel;
  R.panels = panels;
  const double g = V.g();
  const double vmin = detail::potential_minimum(V);
  R.log_scale = -n * vmin / g;
  NodesWeights nw = composite_gauss_legendre(-L, L, panels, points_per_panel);
  R.x = nw.x;
  R.plain = nw.w;
  R.w.resize(R.x.size());
  double total = 0;
  for (size_t i = 0; i < R.x.size(); ++i) {
    R.w[i] = R.plain[i] * std::exp(-n * (V(R.x[i]) - vmin) / g);
    total += R.w[i];
  }
  // tail beyond +-L, bounded by the Laplace estimate exp(-n dV / g) / (n |V'| / g)
  double tail = 0;
  for (double e : {-L, L}) {
    double slope = std::abs(V.V().derivative()(e)) * n / g;
    double dv = n * (V(e) - vmin) / g;
    if (!(slope > 0)) throw Error(ErrorCode::TruncationTooTight, "orthopoly", "build_quadrature", "V is flat at the cut");
    tail += std::exp(-dv) / slope;
  }
  if (tail / total > 1e-16)
    throw Error(ErrorCode::TruncationTooTight, "orthopoly", "build_quadrature",
                "weight mass beyond the truncation exceeds 1e-16");
  return R;
}

// Rule with L from exp(-n (V - Vmin) / g) <= 1e-300 at the cut, >= 20 nodes per degree
// and panels no wider than twice the peak width of the weight.
inline QuadratureRule auto_quadrature(const Potential& V, int n, int l_max, int points_per_panel = 20) {
  double L = detail::auto_truncation(V, n, 300.0 * std::log(10.0));
  int nodes = std::max(20 * (l_max + 1), 400);
  int panels = (nodes + points_per_panel - 1) / points_per_panel;
  // panel width at most twice the width of the weight around its peaks
  const double vmin = detail::potential_minimum(V);
  const Polynomial d2 = V.V().derivative().derivative();
  double curv = 0;
  for (double c : real_roots(V.V().derivative(), 1e-12))
    if (V(c) - vmin < 1e-12 * std::max(1.0, std::abs(vmin))) curv = std::max(curv, d2(c));
  if (curv > 0) {
    double width = std::sqrt(V.g() / (n * curv));
    panels = std::max(panels, static_cast<int>(std::ceil(L / width)));
  }
  return build_quadrature(V, n, L, points_per_panel, panels);
}

inline RecurrenceTable stieltjes_recurrence(const Potential& V, int n, int l_max, const QuadratureRule& rule) {
  if (l_max < 0 || l_max > n + 20)
    throw Error(ErrorCode::InvalidArgument, "orthopoly", "stieltjes_recurrence", "need 0 <= l_max <= n + 20");
  if (rule.n != n || rule.g() != V.g() || rule.potential.describe() != V.describe())
    throw Error(ErrorCode::InvalidArgument, "orthopoly", "stieltjes_recurrence", "rule built for another weight");
  if (rule.size() < static_cast<size_t>(20 * l_max))
    throw Error(ErrorCode::InvalidArgument, "orthopoly", "stieltjes_recurrence", "rule has fewer than 20 l_max nodes");
  const size_t N = rule.size();
  const auto& x = rule.x;
  const auto& w = rule.w;
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < N; ++i) s += w[i] * a[i] * b[i];
    return s;
  };
  RecurrenceTable T;
  T.potential = V;
  T.n = n;
  T.L = rule.L;
  T.node_count = N;
  T.log_mass = rule.log_mass();
  std::vector<double> prev(N, 0.0), cur(N), next(N);
  double mass = 0;
  for (double v : w) mass += v;
  std::fill(cur.begin(), cur.end(), 1.0 / std::sqrt(mass));
  double r_prev = 0;
  for (int l = 0; l <= l_max; ++l) {
    double s = 0;
    for (size_t i = 0; i < N; ++i) s += w[i] * x[i] * cur[i] * cur[i];
    for (size_t i = 0; i < N; ++i) next[i] = (x[i] - s) * cur[i] - r_prev * prev[i];
    double nrm = std::sqrt(dot(next, next));
    double c1 = dot(next, cur), c0 = l > 0 ? dot(next, prev) : 0.0;
    if (std::max(std::abs(c1), std::abs(c0)) > 1e-12 * nrm) {
      for (size_t i = 0; i < N; ++i) next[i] -= c1 * cur[i] + c0 * prev[i];
      s += c1;
    }
    double r = std::sqrt(dot(next, next));
    if (!(r > 0))
      throw Error(ErrorCode::LossOfOrthogonality, "orthopoly", "stieltjes_recurrence",
                  "zero norm at l = " + std::to_string(l) + "; last good l = " + std::to_string(l - 1));
    for (size_t i = 0; i < N; ++i) next[i] /= r;
    if (l > 0 && std::abs(dot(next, prev)) > 1e-8)
      throw Error(ErrorCode::LossOfOrthogonality, "orthopoly", "stieltjes_recurrence",
                  "orthogonality monitor exceeded 1e-8 at l = " + std::to_string(l) +
                      "; last good l = " + std::to_string(l - 1));
    T.r.push_back(r);
    T.s.push_back(s);
    r_prev = r;
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return T;
}

inline RecurrenceTable recurrence(const Potential& V, int n, int l_max) {
  return stieltjes_recurrence(V, n, l_max, auto_quadrature(V, n, l_max));
}

namespace detail {

// p_l(x) / p_0 and its derivative for l = 0..l_top, as mantissas times exp(log_scale).
struct ScaledValues {
  std::vector<double> p, dp;
  std::vector<double> log_scale;
};

inline ScaledValues scaled_polynomials(const RecurrenceTable& t, int l_top, double x) {
  if (l_top < 0 || l_top > t.l_max() + 1)
    throw Error(ErrorCode::RangeExceeded, "orthopoly", "psi_eval", "degree outside the table");
  ScaledValues S;
  S.p.resize(l_top + 1);
  S.dp.resize(l_top + 1);
  S.log_scale.resize(l_top + 1);
  double a = 1, da = 0, b = 0, db = 0, ls = 0;  // a = p_l, b = p_{l-1}
  S.p[0] = 1;
  S.dp[0] = 0;
  S.log_scale[0] = 0;
  for (int l = 0; l < l_top; ++l) {
    double rp = l > 0 ? t.r[l - 1] : 0.0;
    double na = ((x - t.s[l]) * a - rp * b) / t.r[l];
    double nda = (a + (x - t.s[l]) * da - rp * db) / t.r[l];
    b = a;
    db = da;
    a = na;
    da = nda;
    double m = std::max({std::abs(a), std::abs(b), std::abs(da), std::abs(db)});
    if (m > 1e100 || (m < 1e-100 && m > 0)) {
      ls += std::log(m);
      a /= m;
      b /= m;
      da /= m;
      db /= m;
    }
    S.p[l + 1] = a;
    S.dp[l + 1] = da;
    S.log_scale[l + 1] = ls;
  }
  return S;
}

inline double half_log_weight(const RecurrenceTable& t, double x) {
  return -0.5 * t.n * t.potential(x) / t.g() - 0.5 * t.log_mass;
}

}  // namespace detail

// psi_l(x) = exp(-n V(x) / (2g)) p_l(x).
inline double psi_eval(const RecurrenceTable& t, int l, double x) {
  auto S = detail::scaled_polynomials(t, l, x);
  double m = S.p[l];
  if (m == 0.0) return 0.0;
  double e = S.log_scale[l] + std::log(std::abs(m)) + detail::half_log_weight(t, x);
  return std::copysign(std::exp(e), m);
}

inline double psi_eval(const RecurrenceTable& t, const QuadratureRule& rule, int l, double x) {
  if (rule.n != t.n || rule.g() != t.g())
    throw Error(ErrorCode::InvalidArgument, "orthopoly", "psi_eval", "rule built for another weight");
  return psi_eval(t, l, x);
}

enum class KernelMethod { Sum, ChristoffelDarboux, Confluent };

struct KernelEval {
  int n = 0;
  double lambda = 0, mu = 0;
  double value = 0;      // Christoffel-Darboux (or its confluent form)
  double sum_value = 0;  // direct sum over l < n
  KernelMethod method = KernelMethod::ChristoffelDarboux;
};

// K_n(x, y) = sum_{l<n} psi_l(x) psi_l(y), by the sum and by Christoffel-Darboux.
inline KernelEval kernel(const RecurrenceTable& t, int n, double x, double y) {
  if (n < 1 || n > t.l_max() + 1)
    throw Error(ErrorCode::RangeExceeded, "orthopoly", "kernel", "table must reach l = n");
  KernelEval K;
  K.n = n;
  K.lambda = x;
  K.mu = y;
  auto A = detail::scaled_polynomials(t, n, x);
  auto B = detail::scaled_polynomials(t, n, y);
  const double hx = detail::half_log_weight(t, x), hy = detail::half_log_weight(t, y);
  auto val = [](double m, double ls, double h) { return m == 0.0 ? 0.0 : std::copysign(std::exp(ls + h + std::log(std::abs(m))), m); };
  double sum = 0;
  for (int l = 0; l < n; ++l) sum += val(A.p[l], A.log_scale[l], hx) * val(B.p[l], B.log_scale[l], hy);
  K.sum_value = sum;
  const double r = t.r[n - 1];
  if (std::abs(x - y) < 1e-6) {
    K.method = KernelMethod::Confluent;
    // r_{n-1} w(x) (p_n' p_{n-1} - p_{n-1}' p_n)
    double e = A.log_scale[n] + A.log_scale[n - 1] + 2 * hx;
    K.value = r * (A.dp[n] * A.p[n - 1] - A.dp[n - 1] * A.p[n]) * std::exp(e);
  } else {
    double pn_x = val(A.p[n], A.log_scale[n], hx), pm_x = val(A.p[n - 1], A.log_scale[n - 1], hx);
    double pn_y = val(B.p[n], B.log_scale[n], hy), pm_y = val(B.p[n - 1], B.log_scale[n - 1], hy);
    K.value = r * (pn_x * pm_y - pm_x * pn_y) / (x - y);
  }
  return K;
}

inline double density_rho_n(const RecurrenceTable& t, int n, double x) { return kernel(t, n, x, x).value / n; }

// |r_l^{(n)}(g) - r_l^{(l)}(g l / n)| / r_l^{(n)}(g), also over s_l, with independent rules.
inline double scaling_identity_check(const Potential& V, int n, int l) {
  if (l < 1 || l > n) throw Error(ErrorCode::InvalidArgument, "orthopoly", "scaling_identity_check", "need 1 <= l <= n");
  auto lhs = stieltjes_recurrence(V, n, l, auto_quadrature(V, n, l, 20));
  if (l == n) return 0.0;
  Potential W = V.with_amplitude(V.g() * l / n);
  auto rhs = stieltjes_recurrence(W, l, l, auto_quadrature(W, l, l, 24));
  double err = std::abs(lhs.r[l] - rhs.r[l]) / std::abs(lhs.r[l]);
  err = std::max(err, std::abs(lhs.s[l] - rhs.s[l]) / std::abs(lhs.r[l]));
  return err;
}

struct AsymptoticsRow {
  int n;
  double max_deviation;
};

struct AsymptoticsReport {
  std::vector<AsymptoticsRow> rows;
  bool decreasing = true;
};

// Deviation of r_{n+k}, s_{n+k} (|k| <= k_window) from the periodic limit, best over the period phase.
inline AsymptoticsReport coefficient_asymptotics_check(const Potential& V, const std::vector<int>& n_list, int k_window) {
  V.require_square("coefficient_asymptotics_check");
  JacobiOperator J = periodic_from_square(V);
  const int p = J.period();
  AsymptoticsReport rep;
  for (int n : n_list) {
    if (n - k_window < 0)
      throw Error(ErrorCode::InvalidArgument, "orthopoly", "coefficient_asymptotics_check", "window below l = 0");
    auto t = recurrence(V, n, n + k_window);
    double best = std::numeric_limits<double>::infinity();
    for (int phase = 0; phase < p; ++phase) {
      double dev = 0;
      for (int k = -k_window; k <= k_window; ++k) {
        dev = std::max(dev, std::abs(t.r[n + k] - J.r_at(k + phase)));
        dev = std::max(dev, std::abs(t.s[n + k] - J.s_at(k + phase)));
      }
      best = std::min(best, dev);
    }
    if (!rep.rows.empty() && best >= rep.rows.back().max_deviation) rep.decreasing = false;
    rep.rows.push_back({n, best});
  }
  return rep;
}

}  // namespace specband
