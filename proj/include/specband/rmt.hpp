#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "specband/error.hpp"
#include "specband/jacobi.hpp"
#include "specband/orthopoly.hpp"
#include "specband/parallel.hpp"
#include "specband/potential.hpp"
#include "specband/quadrature.hpp"

namespace specband {

using cplx = std::complex<double>;

struct MCParams {
  int chains = 4;
  long sweeps = 10000;  // retained-phase sweeps per chain
  long burn_in = 2000;
  int thin = 5;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct Chain {
  std::vector<double> configs;  // row-major, n values per retained configuration
  double acceptance = 0;
  double step = 0;
};

// Eigenvalue configurations of the unitary-invariant ensemble with weight exp(-n V / g).
struct EnsembleSample {
  int n = 0;
  Potential potential;
  MCParams params;
  std::vector<Chain> chains;

  size_t per_chain() const { return chains.empty() ? 0 : chains[0].configs.size() / n; }
  size_t total() const { return per_chain() * chains.size(); }
  const double* config(size_t chain, size_t k) const { return chains[chain].configs.data() + k * n; }
  double acceptance() const {
    double a = 0;
    for (const auto& c : chains) a += c.acceptance;
    return chains.empty() ? 0 : a / chains.size();
  }
};

namespace detail {

inline Chain run_chain(const Potential& V, int n, const MCParams& P, int chain_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(P.seed & 0xffffffffu), static_cast<std::uint32_t>(P.seed >> 32),
                    static_cast<std::uint32_t>(chain_index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double beta_field = n / V.g();

  // start at the zeros of p_n; fall back to an even spread around the lowest minimum
  std::vector<double> x(n);
  double lo_min = 1e300, hi_min = -1e300, c = 0, vmin = 1e300;
  for (double r : real_roots(V.V().derivative(), 1e-12)) {
    if (V.V().derivative().derivative()(r) <= 0) continue;
    lo_min = std::min(lo_min, r);
    hi_min = std::max(hi_min, r);
    if (V(r) < vmin) {
      vmin = V(r);
      c = r;
    }
  }
  const double mirror = lo_min + hi_min;  // reflection x -> mirror - x
  try {
    auto t = recurrence(V, n, n);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) J(i, i) = t.s[i];
    for (int i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = t.r[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    for (int i = 0; i < n; ++i) x[i] = es.eigenvalues()(i);
  } catch (const Error&) {
    for (int i = 0; i < n; ++i) x[i] = c + (n == 1 ? 0.0 : -1.0 + 2.0 * i / (n - 1.0));
  }
  auto log_ratio = [&](int i, double y) {
    double d = -beta_field * (V(y) - V(x[i]));
    for (int j = 0; j < n; ++j)
      if (j != i) d += 2.0 * std::log(std::abs((y - x[j]) / (x[i] - x[j])));
    return d;
  };

  Chain out;
  double step = 1.0 / std::max(1, n / 4);
  long accepted = 0, proposed = 0, window_acc = 0, window_prop = 0, far_sweeps = 0;
  const long total = P.burn_in + P.sweeps;
  for (long sweep = 0; sweep < total; ++sweep) {
    for (int i = 0; i < n; ++i) {
      double y = x[i] + step * normal(rng);
      double d = log_ratio(i, y);
      bool acc = d >= 0 || unif(rng) < std::exp(d);
      if (acc) x[i] = y;
      if (sweep >= P.burn_in) {
        ++proposed;
        accepted += acc;
      } else {
        ++window_prop;
        window_acc += acc;
      }
      // the reflection is an involution, so it is a symmetric proposal
      if (unif(rng) < 0.1) {
        double yr = mirror - x[i];
        double dr = log_ratio(i, yr);
        if (dr >= 0 || unif(rng) < std::exp(dr)) x[i] = yr;
      }
    }
    double mx = 0;
    for (double v : x) mx = std::max(mx, std::abs(v));
    far_sweeps = mx > 50 ? far_sweeps + 1 : 0;
    if (far_sweeps > 100) throw Error(ErrorCode::NonConfining, "rmt", "sample_loggas", "walker beyond |x| > 50 persistently");
    if (sweep < P.burn_in && (sweep + 1) % 10 == 0) {
      double rate = static_cast<double>(window_acc) / window_prop;
      if (rate < 0.3) step *= 0.8;
      if (rate > 0.5) step *= 1.25;
      window_acc = window_prop = 0;
    }
    if (sweep >= P.burn_in && (sweep - P.burn_in) % P.thin == 0) {
      std::vector<double> s(x);
      std::sort(s.begin(), s.end());
      out.configs.insert(out.configs.end(), s.begin(), s.end());
    }
  }
  out.acceptance = proposed ? static_cast<double>(accepted) / proposed : 0.0;
  out.step = step;
  return out;
}

}  // namespace detail

inline EnsembleSample sample_loggas(const Potential& V, int n, const MCParams& P) {
  if (n < 1 || n > 256) throw Error(ErrorCode::InvalidArgument, "rmt", "sample_loggas", "n must be in [1, 256]");
  if (P.sweeps < 10000) throw Error(ErrorCode::InvalidArgument, "rmt", "sample_loggas", "sweeps must be >= 10000");
  if (P.chains < 1 || P.thin < 1 || P.burn_in < 0)
    throw Error(ErrorCode::InvalidArgument, "rmt", "sample_loggas", "need chains >= 1, thin >= 1, burn_in >= 0");
  EnsembleSample S;
  S.n = n;
  S.potential = V;
  S.params = P;
  S.chains.resize(P.chains);
  parallel_for(P.chains, P.workers, [&](size_t c) { S.chains[c] = detail::run_chain(V, n, P, static_cast<int>(c)); });
  return S;
}

struct TestFunction {
  enum class Kind { Resolvent, Polynomial, Indicator } kind = Kind::Polynomial;
  cplx z = 0;
  std::vector<double> coeffs{1.0};
  double a = 0, b = 0;

  static TestFunction resolvent(cplx z) {
    if (z.imag() == 0) throw Error(ErrorCode::InvalidArgument, "rmt", "TestFunction", "resolvent needs Im z != 0");
    TestFunction f;
    f.kind = Kind::Resolvent;
    f.z = z;
    return f;
  }
  static TestFunction polynomial(std::vector<double> c) {
    TestFunction f;
    f.coeffs = std::move(c);
    return f;
  }
  static TestFunction indicator(double a, double b) {
    TestFunction f;
    f.kind = Kind::Indicator;
    f.a = a;
    f.b = b;
    return f;
  }

  cplx operator()(double x) const {
    switch (kind) {
      case Kind::Resolvent:
        return 1.0 / (x - z);
      case Kind::Indicator:
        return (x > a && x < b) ? 1.0 : 0.0;
      default: {
        double s = 0;
        for (size_t k = coeffs.size(); k-- > 0;) s = s * x + coeffs[k];
        return s;
      }
    }
  }
};

// Mean with an error bar from the integrated autocorrelation time (Sokal windowing, c = 5).
struct SeriesSummary {
  double mean = 0;
  double variance = 0;
  double stderr_ = 0;
  double tau_int = 0.5;
};

inline SeriesSummary summarize(const std::vector<std::vector<double>>& per_chain) {
  SeriesSummary S;
  size_t N = 0;
  for (const auto& c : per_chain) {
    N += c.size();
    for (double v : c) S.mean += v;
  }
  if (N == 0) return S;
  S.mean /= N;
  size_t len = per_chain[0].size();
  for (const auto& c : per_chain) len = std::min(len, c.size());
  auto autocov = [&](size_t t) {
    double s = 0;
    size_t cnt = 0;
    for (const auto& c : per_chain)
      for (size_t k = 0; k + t < c.size(); ++k) {
        s += (c[k] - S.mean) * (c[k + t] - S.mean);
        ++cnt;
      }
    return cnt ? s / cnt : 0.0;
  };
  double c0 = autocov(0);
  S.variance = c0;
  if (!(c0 > 0)) return S;
  double tau = 0.5;
  for (size_t W = 1; W < len; ++W) {
    tau += autocov(W) / c0;
    if (static_cast<double>(W) >= 5.0 * tau) break;
  }
  S.tau_int = std::max(tau, 0.5);
  S.stderr_ = std::sqrt(c0 * 2.0 * S.tau_int / N);
  return S;
}

struct LinearStatistic {
  std::vector<std::vector<cplx>> series;  // per chain, per retained configuration
  SeriesSummary re, im;
  cplx mean() const { return {re.mean, im.mean}; }
};

namespace detail {
inline void split(const std::vector<std::vector<cplx>>& s, std::vector<std::vector<double>>& re,
                  std::vector<std::vector<double>>& im) {
  re.assign(s.size(), {});
  im.assign(s.size(), {});
  for (size_t c = 0; c < s.size(); ++c)
    for (cplx v : s[c]) {
      re[c].push_back(v.real());
      im[c].push_back(v.imag());
    }
}
}  // namespace detail

// N_n[phi] = n^{-1} sum phi(lambda_l) for every retained configuration.
inline LinearStatistic linear_statistic(const EnsembleSample& S, const TestFunction& phi) {
  LinearStatistic L;
  L.series.resize(S.chains.size());
  for (size_t c = 0; c < S.chains.size(); ++c)
    for (size_t k = 0; k < S.per_chain(); ++k) {
      const double* x = S.config(c, k);
      cplx s = 0;
      for (int i = 0; i < S.n; ++i) s += phi(x[i]);
      L.series[c].push_back(s / static_cast<double>(S.n));
    }
  std::vector<std::vector<double>> re, im;
  detail::split(L.series, re, im);
  L.re = summarize(re);
  L.im = summarize(im);
  return L;
}

struct CovEstimate {
  cplx cov = 0;
  double stderr_ = 0;  // modulus of the (re, im) error bars
};

// Bilinear covariance E[(X - EX)(Y - EY)] of two statistics on the same sample.
inline CovEstimate covariance(const LinearStatistic& A, const LinearStatistic& B) {
  cplx ma = A.mean(), mb = B.mean();
  std::vector<std::vector<cplx>> prod(A.series.size());
  for (size_t c = 0; c < A.series.size(); ++c)
    for (size_t k = 0; k < A.series[c].size(); ++k) prod[c].push_back((A.series[c][k] - ma) * (B.series[c][k] - mb));
  std::vector<std::vector<double>> re, im;
  detail::split(prod, re, im);
  auto sr = summarize(re), si = summarize(im);
  return {{sr.mean, si.mean}, std::hypot(sr.stderr_, si.stderr_)};
}

struct CovarianceRow {
  int n;
  cplx cov;
  double stderr_;
  cplx n2cov;
  double n2_stderr;
  double ratio_to_previous;  // |n^2 Cov(n)| / |n^2 Cov(previous n)|, 0 for the first row
};

inline std::vector<CovarianceRow> covariance_scaling(const Potential& V, const TestFunction& f1, const TestFunction& f2,
                                                     const std::vector<int>& n_list, const MCParams& P) {
  std::vector<CovarianceRow> rows;
  for (int n : n_list) {
    if (n < 8 || n > 128) throw Error(ErrorCode::InvalidArgument, "rmt", "covariance_scaling", "n must be in [8, 128]");
    auto S = sample_loggas(V, n, P);
    auto e = covariance(linear_statistic(S, f1), linear_statistic(S, f2));
    if (!(e.cov == cplx(0) && e.stderr_ == 0) && e.stderr_ > 0.5 * std::abs(e.cov))
      throw Error(ErrorCode::InsufficientSamples, "rmt", "covariance_scaling",
                  "relative error of Cov exceeds 50% at n = " + std::to_string(n));
    double n2 = static_cast<double>(n) * n;
    CovarianceRow r{n, e.cov, e.stderr_, n2 * e.cov, n2 * e.stderr_, 0.0};
    if (!rows.empty() && std::abs(rows.back().n2cov) > 0) r.ratio_to_previous = std::abs(r.n2cov) / std::abs(rows.back().n2cov);
    rows.push_back(r);
  }
  return rows;
}

namespace detail {

// Rows sqrt(w_i) psi_l(x_i), l < n, on the rule of the table.
inline Eigen::MatrixXd weighted_psi(const RecurrenceTable& t, const std::vector<double>& x, const std::vector<double>& w,
                                    int n) {
  Eigen::MatrixXd Phi(x.size(), n);
  for (size_t i = 0; i < x.size(); ++i)
    for (int l = 0; l < n; ++l) Phi(i, l) = std::sqrt(w[i]) * psi_eval(t, l, x[i]);
  return Phi;
}

}  // namespace detail

// (1 / 2n^2) sum_ij (f1(x_i) - f1(x_j)) (f2(x_i) - f2(x_j)) K_n(x_i, x_j)^2 w_i w_j.
inline cplx covariance_kernel(const Potential& V, int n, const TestFunction& f1, const TestFunction& f2) {
  auto R = auto_quadrature(V, n, n);
  auto t = stieltjes_recurrence(V, n, n, R);
  Eigen::MatrixXd Phi = detail::weighted_psi(t, R.x, R.plain, n);
  Eigen::MatrixXd K = Phi * Phi.transpose();
  const size_t N = R.size();
  std::vector<cplx> a(N), b(N);
  for (size_t i = 0; i < N; ++i) {
    a[i] = f1(R.x[i]);
    b[i] = f2(R.x[i]);
  }
  cplx s = 0;
  for (size_t i = 0; i < N; ++i)
    for (size_t j = 0; j < i; ++j) s += (a[i] - a[j]) * (b[i] - b[j]) * K(i, j) * K(i, j);
  return s / (static_cast<double>(n) * n);  // the pair sum counts each unordered pair once
}

struct GapResult {
  double value = 1;
  double raw = 1;
  bool clamped = false;
};

// det(1 - K_n) on the interval (a, b), via det(I_n - Phi^T Phi) with Phi the weighted
// psi values on composite Gauss nodes (same nonzero spectrum as the Nystrom matrix).
inline GapResult gap_probability(const Potential& V, int n, double a, double b, int quad_order = 40) {
  if (quad_order < 40) throw Error(ErrorCode::InvalidArgument, "rmt", "gap_probability", "quad_order must be >= 40");
  GapResult G;
  if (!(b > a)) return G;
  auto t = recurrence(V, n, n);
  a = std::max(a, -t.L);
  b = std::min(b, t.L);
  if (!(b > a)) return G;
  // panels no wider than the local oscillation scale of psi_{n-1}
  double scale = std::sqrt(V.g() / n);
  const Polynomial d2 = V.V().derivative().derivative();
  for (double c : real_roots(V.V().derivative(), 1e-12))
    if (d2(c) > 0) scale = std::min(scale, std::sqrt(V.g() / (n * d2(c))));
  int panels = std::max(1, static_cast<int>(std::ceil((b - a) / (4.0 * scale))));
  NodesWeights nw = composite_gauss_legendre(a, b, panels, quad_order);
  Eigen::MatrixXd Phi = detail::weighted_psi(t, nw.x, nw.w, n);
  Eigen::MatrixXd Gram = Phi.transpose() * Phi;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gram);
  double det = 1;
  for (int k = 0; k < n; ++k) det *= 1.0 - es.eigenvalues()(k);
  G.raw = det;
  G.value = std::clamp(det, 0.0, 1.0);
  G.clamped = G.value != det;
  return G;
}

// Fraction of retained configurations with no eigenvalue in (a, b), with its error bar.
inline SeriesSummary empty_interval_frequency(const EnsembleSample& S, double a, double b) {
  std::vector<std::vector<double>> ind(S.chains.size());
  for (size_t c = 0; c < S.chains.size(); ++c)
    for (size_t k = 0; k < S.per_chain(); ++k) {
      const double* x = S.config(c, k);
      bool empty = true;
      for (int i = 0; i < S.n; ++i)
        if (x[i] > a && x[i] < b) empty = false;
      ind[c].push_back(empty ? 1.0 : 0.0);
    }
  return summarize(ind);
}

struct Correspondence {
  cplx lhs;
  double lhs_stderr;
  cplx rhs;          // int_0^1 dg' int phi d nu_{g g'}
  cplx rhs_direct;   // int phi dN_g
};

inline Correspondence functional_correspondence(const Potential& V, const TestFunction& phi, int n, int g_nodes,
                                                const MCParams& P) {
  V.require_square("functional_correspondence");
  if (g_nodes < 2) throw Error(ErrorCode::InvalidArgument, "rmt", "functional_correspondence", "g_nodes must be >= 2");
  Correspondence C;
  auto S = sample_loggas(V, n, P);
  auto L = linear_statistic(S, phi);
  C.lhs = L.mean();
  C.lhs_stderr = std::hypot(L.re.stderr_, L.im.stderr_);
  const NodesWeights& gl = gauss_legendre(g_nodes);
  cplx acc = 0;
  for (int i = 0; i < g_nodes; ++i) {
    double gp = 0.5 * (gl.x[i] + 1.0);
    auto nu = nu_measure(V.with_amplitude(V.g() * gp));
    double re = nu.integrate([&](double x) { return phi(x).real(); });
    double im = nu.integrate([&](double x) { return phi(x).imag(); });
    acc += 0.5 * gl.w[i] * cplx(re, im);
  }
  C.rhs = acc;
  auto N = N_measure(V);
  C.rhs_direct = {N.integrate([&](double x) { return phi(x).real(); }), N.integrate([&](double x) { return phi(x).imag(); })};
  return C;
}

// r_{-1}^2 (dG00 dG_{-1,-1} - dG_{0,-1}^2) for the periodic limit rotated by x_shift sites,
// with dG the divided difference in z (derivative when z1 = z2).
inline cplx variance_formula_eval(const Potential& V, cplx z1, cplx z2, int x_shift = 0, size_t m = 4000) {
  JacobiOperator J0 = periodic_from_square(V);
  const int p = J0.period();
  std::vector<double> r(p), s(p);
  for (int k = 0; k < p; ++k) {
    r[k] = J0.r_at(k + x_shift);
    s[k] = J0.s_at(k + x_shift);
  }
  JacobiOperator J = JacobiOperator::periodic(r, s);
  const std::vector<IndexPair> idx = {{0, 0}, {-1, -1}, {0, -1}};
  std::vector<cplx> d(3);
  if (std::abs(z1 - z2) < 1e-8 * std::max(1.0, std::abs(z1))) {
    d = resolvent_entries(J, z1, m, idx, 1);
  } else {
    auto g1 = resolvent_entries(J, z1, m, idx), g2 = resolvent_entries(J, z2, m, idx);
    for (int k = 0; k < 3; ++k) d[k] = (g1[k] - g2[k]) / (z1 - z2);
  }
  double rr = J.r_at(-1);
  return rr * rr * (d[0] * d[1] - d[2] * d[2]);
}

}  // namespace specband
