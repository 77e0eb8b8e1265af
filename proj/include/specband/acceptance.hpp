#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "specband/equilibrium.hpp"
#include "specband/jacobi.hpp"
#include "specband/orthopoly.hpp"
#include "specband/riemann.hpp"
#include "specband/rmt.hpp"

namespace specband::acceptance {

struct Outcome {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double limit_seconds = 0;  // 0: no limit
};

struct Options {
  int workers = 1;
  std::uint64_t seed = 1;
  std::vector<int> only;  // empty: all criteria
};

namespace detail {

struct Check {
  bool ok = true;
  std::ostringstream os;

  void le(const char* what, double value, double bound) {
    ok = ok && value <= bound;
    os << what << "=" << value << (value <= bound ? "<=" : ">") << bound << " ";
  }
  void ge(const char* what, double value, double bound) {
    ok = ok && value >= bound;
    os << what << "=" << value << (value >= bound ? ">=" : "<") << bound << " ";
  }
  void that(const char* what, bool cond) {
    ok = ok && cond;
    os << what << (cond ? " ok " : " FAILED ");
  }
};

inline Potential semicircle() { return Potential::square({0.0, 1.0}, 1.0); }
inline Potential quartic() { return Potential::square({-5.0, 0.0, 1.0}, 1.0); }
inline const double s7 = std::sqrt(7.0), s3 = std::sqrt(3.0);

inline double density_near(const EquilibriumResult& r, double x) {
  const auto& m = r.measure;
  for (size_t i = 0; i < m.size(); ++i)
    if (x >= m.cell_lo[i] && x <= m.cell_hi[i]) {
      // average the two cells sharing x when it sits on a boundary
      if (x == m.cell_hi[i] && i + 1 < m.size()) return 0.5 * (m.density(i) + m.density(i + 1));
      return m.density(i);
    }
  return 0;
}

inline void c1(Check& c, const Options& o) {
  SolverParams P;
  P.workers = o.workers;
  auto r = minimize_external_field(semicircle(), 3.0, 2000, P);
  double h = r.measure.width(0);
  c.le("|rho(0)-1/pi|", std::abs(density_near(r, 0.0) - 1 / std::numbers::pi), 2e-3);
  c.that("one band", r.support.q() == 1);
  if (r.support.q() == 1) {
    c.le("|a+2|/h", std::abs(r.support.lower() + 2) / h, 2);
    c.le("|b-2|/h", std::abs(r.support.upper() - 2) / h, 2);
  }
}

inline void c2(Check& c, const Options& o) {
  SolverParams P;
  P.workers = o.workers;
  auto r = minimize_external_field(quartic(), 3.2, 2000, P);
  double h = r.measure.width(0);
  c.that("two bands", r.support.q() == 2);
  if (r.support.q() != 2) return;
  const double e[4] = {-s7, -s3, s3, s7};
  double worst = 0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(r.support.edges()[k] - e[k]) / h);
  c.le("edge_err/h", worst, 2);
  auto b = frequencies(r);
  c.le("|mass-1/2|", std::abs(b.values[0] - 0.5), 2e-3);
}

inline void c3(Check& c, const Options&) {
  auto t = recurrence(semicircle(), 40, 60);
  double worst = 0;
  for (int l = 0; l <= 60; ++l) worst = std::max(worst, std::abs(t.r[l] - std::sqrt((l + 1.0) / 40)));
  c.le("max|r_l-sqrt((l+1)/40)|", worst, 1e-10);
}

inline void c4(Check& c, const Options&) {
  auto H = hill_discriminant(JacobiOperator::periodic({0.5 * (s7 + s3), 0.5 * (s7 - s3)}, {0.0, 0.0}));
  Polynomial expect({-2.5, 0.0, 0.5});
  double worst = 0;
  for (int k = 0; k <= 2; ++k) worst = std::max(worst, std::abs(H.discriminant.coeff(k) - expect.coeff(k)));
  c.that("degree 2", H.discriminant.degree() == 2);
  c.le("max coeff err", worst, 1e-10);
}

inline void c5(Check& c, const Options&) {
  auto V = quartic();
  auto op = periodic_from_square(V);
  auto bs = bands_from_polynomial(V);
  std::vector<double> grid;
  for (int i = 0; i <= 2000; ++i) grid.push_back(bs.lower() - 0.2 + (bs.upper() - bs.lower() + 0.4) * i / 2000.0);
  auto k = ids_estimate(op, 2000, grid);
  double sup = 0;
  for (size_t i = 0; i < grid.size(); ++i) sup = std::max(sup, std::abs(k[i] - counting_functions_any(V, grid[i]).nu));
  c.le("sup|k_m-nu|", sup, 5e-3);
}

inline void c6(Check& c, const Options&) {
  c.le("q=1 sup", check_nnu(semicircle(), 1.0, 32), 1e-3);
  c.le("q=2 sup", check_nnu(quartic(), 1.0, 32), 1e-3);
}

inline void c7(Check& c, const Options&) {
  c.le("symmetric", rie_relation_check(surface_from_bands(BandSet({-s7, -s3, s3, s7}))), 1e-7);
  c.le("asymmetric", rie_relation_check(surface_from_bands(BandSet({-3, -1, 0, 3}))), 1e-7);
}

inline void c8(Check& c, const Options&) {
  auto S = surface_from_bands(BandSet({-s7, -s3, s3, s7}));
  double hi = 0.5 * (s7 + s3), lo = 0.5 * (s7 - s3);
  c.le("closed form", shift_equivalence_fit(S, {hi, lo, hi, lo, hi, lo}).residual, 1e-6);
  double prev = 1e300;
  bool decreasing = true;
  for (int n : {20, 40, 60}) {
    auto t = recurrence(quartic(), n, n + 6);
    std::vector<double> targets(t.r.begin() + n, t.r.begin() + n + 6);
    double res = shift_equivalence_fit(S, targets).residual;
    decreasing = decreasing && res < prev;
    prev = res;
  }
  c.le("window n=60", prev, 5e-2);
  c.that("decreasing in n", decreasing);
}

inline MCParams mc(const Options& o, long sweeps, int thin) {
  MCParams P;
  P.sweeps = sweeps;
  P.thin = thin;
  P.seed = o.seed;
  P.workers = o.workers;
  return P;
}

inline void c9(Check& c, const Options& o) {
  auto G = gap_probability(semicircle(), 8, -0.25, 0.25);
  auto S = sample_loggas(semicircle(), 8, mc(o, 25000, 1));
  c.ge("retained", static_cast<double>(S.total()), 1e5);
  auto f = empty_interval_frequency(S, -0.25, 0.25);
  c.os << "E=" << G.value << " mc=" << f.mean << " ";
  c.le("|E-mc|/se", std::abs(G.value - f.mean) / f.stderr_, 3);
}

inline void c10(Check& c, const Options& o) {
  auto f1 = TestFunction::resolvent({0, 2}), f2 = TestFunction::resolvent({0, -2});
  auto rows = covariance_scaling(semicircle(), f1, f2, {16, 32}, mc(o, 10000, 5));
  c.ge("ratio", rows[1].ratio_to_previous, 0.5);
  c.le("ratio", rows[1].ratio_to_previous, 2.0);
  cplx kern = covariance_kernel(semicircle(), 16, f1, f2);
  auto S = sample_loggas(semicircle(), 16, mc(o, 40000, 5));
  auto e = covariance(linear_statistic(S, f1), linear_statistic(S, f2));
  c.le("|mc-kernel|/se", std::abs(e.cov - kern) / e.stderr_, 3);
}

inline void c11(Check& c, const Options&) {
  for (const Potential& V : {semicircle(), quartic()}) {
    auto op = periodic_from_square(V);
    auto bs = bands_from_polynomial(V);
    bool zero = true;
    for (size_t l = 0; l < bs.q(); ++l)
      for (int k = 1; k < 20; ++k) zero = zero && lyapunov_exponent(op, bs.a(l) + (bs.b(l) - bs.a(l)) * k / 20.0) == 0.0;
    c.that(V.q() == 1 ? "q=1 in-band gamma==0" : "q=2 in-band gamma==0", zero);
    std::vector<double> pts = {bs.upper() + 0.5, bs.lower() - 1.0};
    if (bs.q() > 1) pts.push_back(0.5 * (bs.b(0) + bs.a(1)));
    c.le(V.q() == 1 ? "q=1 thouless" : "q=2 thouless", thouless_check(op, nu_measure(V), pts), 1e-6);
  }
}

inline void c12(Check& c, const Options& o) {
  {
    auto V = quartic();
    auto R = auto_quadrature(V, 30, 26);
    auto t = stieltjes_recurrence(V, 30, 26, R);
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
    c.le("gram", worst, 1e-9);
  }
  {
    auto S = surface_from_bands(bands_from_polynomial(Potential::square({0.3, -4.0, 0.0, 1.0}, 0.7)));
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
      std::vector<double> x = {u(rng), u(rng)};
      auto t = theta(x, S).value;
      worst = std::max(worst, std::abs(theta({-x[0], -x[1]}, S).value - t));
      worst = std::max(worst, std::abs(theta({x[0] + 1, x[1]}, S).value - t));
      worst = std::max(worst, std::abs(theta({x[0], x[1] + 1}, S).value - t));
    }
    c.le("theta sym", worst, 1e-12);
  }
  {
    double worst = 0;
    for (auto [V, a, b] : {std::tuple{semicircle(), -0.1, 0.1}, std::tuple{semicircle(), -0.5, 0.8},
                           std::tuple{quartic(), 1.6, 2.0}, std::tuple{quartic(), 1.9, 2.7}})
      worst = std::max(worst, std::abs(gap_probability(V, 10, a, b, 40).value - gap_probability(V, 10, a, b, 80).value));
    c.le("fredholm 40/80", worst, 1e-8);
  }
  {
    auto P = mc(o, 10000, 10);
    auto a = sample_loggas(quartic(), 12, P);
    P.workers = 1;
    auto b = sample_loggas(quartic(), 12, P);
    bool same = a.chains.size() == b.chains.size();
    for (size_t k = 0; same && k < a.chains.size(); ++k) same = a.chains[k].configs == b.chains[k].configs;
    c.that("seeded determinism", same);
  }
}

struct Entry {
  int id;
  const char* title;
  double limit;
  void (*run)(Check&, const Options&);
};

inline const std::vector<Entry>& table() {
  static const std::vector<Entry> t = {
      {1, "semicircle equilibrium", 60, c1},
      {2, "two-band support", 0, c2},
      {3, "Hermite recurrence", 10, c3},
      {4, "Hill discriminant", 0, c4},
      {5, "IDS of period-2 truncations", 30, c5},
      {6, "N from nu by g-integration", 0, c6},
      {7, "Riemann relation, genus 1", 0, c7},
      {8, "isospectral shift fit", 0, c8},
      {9, "gap probability vs Monte Carlo", 300, c9},
      {10, "covariance order and kernel formula", 0, c10},
      {11, "Lyapunov zero in bands, Thouless in gaps", 0, c11},
      {12, "property suites", 0, c12},
  };
  return t;
}

}  // namespace detail

inline Outcome run_one(int id, const Options& o) {
  for (const auto& s : detail::table()) {
    if (s.id != id) continue;
    Outcome out{s.id, s.title, false, "", 0, s.limit};
    detail::Check c;
    c.os.precision(3);
    auto t0 = std::chrono::steady_clock::now();
    try {
      s.run(c, o);
      out.pass = c.ok;
    } catch (const std::exception& e) {
      c.os << "exception: " << e.what();
      out.pass = false;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (s.limit > 0 && out.seconds > s.limit) {
      out.pass = false;
      c.os << "time limit " << s.limit << "s exceeded ";
    }
    out.detail = c.os.str();
    return out;
  }
  throw Error(ErrorCode::InvalidArgument, "acceptance", "run_one", "no criterion " + std::to_string(id));
}

inline std::string format(const Outcome& r) {
  char head[96];
  std::snprintf(head, sizeof head, "criterion %2d %s  %-42s %7.2fs  ", r.id, r.pass ? "PASS" : "FAIL", r.title.c_str(),
                r.seconds);
  return head + r.detail;
}

// Runs the criteria in order; `report` sees each outcome as soon as it is known.
inline std::vector<Outcome> run(const Options& o, const std::function<void(const Outcome&)>& report = {}) {
  std::vector<Outcome> out;
  for (const auto& s : detail::table()) {
    if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), s.id) == o.only.end()) continue;
    out.push_back(run_one(s.id, o));
    if (report) report(out.back());
  }
  return out;
}

}  // namespace specband::acceptance
