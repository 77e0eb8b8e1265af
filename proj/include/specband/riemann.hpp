#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "specband/band_set.hpp"
#include "specband/error.hpp"
#include "specband/quadrature.hpp"

namespace specband {

// Hyperelliptic curve w^2 = prod (z - a_l)(z - b_l) of a band set.
// Cycles: a_j around gap j, b_j from gap j through the bands above it to the gap at infinity.
struct SurfaceData {
  BandSet bands{std::vector<double>{-2.0, 2.0}};
  int genus = 0;
  Eigen::MatrixXd im_tau;  // tau = i * im_tau
  std::vector<double> U;   // b-periods of the normalized third-kind differential / 2 pi i
  std::vector<double> u_inf;  // Abel image of infinity on the lower sheet, base point b_q
  double l_sigma = 0;
  double min_eig_im_tau = 0;
  double tau_asymmetry = 0;  // max |Im tau_ij - Im tau_ji| before symmetrizing
  double condition = 1;
  int nodes = 0;
  // monic harmonic polynomial and normalized holomorphic differentials in the scaled variable
  double center = 0, half_width = 1;
  std::vector<double> harmonic;       // coefficients of P_h(t), t = (x - center) / half_width
  Eigen::MatrixXd differentials;      // row i: coefficients of omega_i numerator in t

  std::complex<double> tau(int i, int j) const { return {0.0, im_tau(i, j)}; }
};

namespace detail {

inline double scaled_power_sum(const std::vector<double>& c, double t) {
  double s = 0;
  for (size_t k = c.size(); k-- > 0;) s = s * t + c[k];
  return s;
}

// int_lo^hi f(x) / sqrt(|R(x)|) dx where lo, hi are consecutive roots of R.
template <class F>
double chebyshev_segment(const std::vector<double>& e, size_t i_lo, F&& f, int N) {
  const double lo = e[i_lo], hi = e[i_lo + 1];
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double s = 0;
  for (int k = 1; k <= N; ++k) {
    double x = mid + half * std::cos((2.0 * k - 1.0) * std::numbers::pi / (2.0 * N));
    double rest = 1;
    for (size_t m = 0; m < e.size(); ++m)
      if (m != i_lo && m != i_lo + 1) rest *= std::abs(x - e[m]);
    s += f(x) / std::sqrt(rest);
  }
  return s * std::numbers::pi / N;
}

// int_{b_q}^inf f(x) / sqrt(R(x)) dx with x = b_q + t^2 and t = s / (1 - s); f must decay.
template <class F>
double tail_integral(const std::vector<double>& e, F&& f, int N) {
  const double bq = e.back();
  const NodesWeights& gl = gauss_legendre(N);
  double acc = 0;
  for (int i = 0; i < N; ++i) {
    double s = 0.5 * (gl.x[i] + 1.0);
    double t = s / (1.0 - s);
    double x = bq + t * t;
    double rest = 1;
    for (size_t m = 0; m + 1 < e.size(); ++m) rest *= x - e[m];
    // dx / sqrt(R) = 2 t dt / (t sqrt(rest)); dt = ds / (1 - s)^2
    acc += 0.5 * gl.w[i] * f(x, t) * 2.0 / std::sqrt(rest) / ((1.0 - s) * (1.0 - s));
  }
  return acc;
}

}  // namespace detail

inline SurfaceData surface_from_bands(const BandSet& bands, int nodes = 96) {
  SurfaceData S;
  S.bands = bands;
  S.nodes = nodes;
  const int q = static_cast<int>(bands.q());
  const int g = q - 1;
  S.genus = g;
  const std::vector<double>& e = bands.edges();
  S.center = 0.5 * (bands.lower() + bands.upper());
  S.half_width = 0.5 * (bands.upper() - bands.lower());
  auto tvar = [&](double x) { return (x - S.center) / S.half_width; };
  auto tpow = [&](double x, int k) { return std::pow(tvar(x), k); };

  if (g == 0) {
    S.l_sigma = 2.0 * std::log(0.25 * (bands.upper() - bands.lower()));
    S.harmonic = {1.0};
    S.im_tau = Eigen::MatrixXd(0, 0);
    return S;
  }

  // moments over gaps (G) and bands (B) of t^k / sqrt|R|, k = 0..q-1
  Eigen::MatrixXd G(g, q), B(q, q);
  for (int j = 0; j < g; ++j)
    for (int k = 0; k < q; ++k) G(j, k) = detail::chebyshev_segment(e, 2 * j + 1, [&](double x) { return tpow(x, k); }, nodes);
  for (int l = 0; l < q; ++l)
    for (int k = 0; k < q; ++k) B(l, k) = detail::chebyshev_segment(e, 2 * l, [&](double x) { return tpow(x, k); }, nodes);

  Eigen::MatrixXd A = G.leftCols(g);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  S.condition = svd.singularValues()(0) / svd.singularValues()(g - 1);
  if (!(S.condition <= 1e10))
    throw Error(ErrorCode::IllConditioned, "riemann", "surface_from_bands", "period normalization is ill conditioned");

  // harmonic polynomial: monic, zero integral over every gap
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(-G.col(g));
  S.harmonic.assign(c.data(), c.data() + g);
  S.harmonic.push_back(1.0);
  const double hscale = std::pow(S.half_width, g);
  std::vector<double> mass(q);
  for (int l = 0; l < q; ++l) {
    double m = 0;
    for (int k = 0; k < q; ++k) m += S.harmonic[k] * B(l, k);
    mass[l] = hscale * std::abs(m) / std::numbers::pi;
  }
  S.U.assign(g, 0.0);
  for (int j = 0; j < g; ++j)
    for (int l = j + 1; l < q; ++l) S.U[j] += mass[l];

  // normalized holomorphic differentials: a-periods 2 * sign * int_gap = delta
  Eigen::MatrixXd signedA(g, g);
  for (int j = 0; j < g; ++j) {
    double sg = ((q - 1 - j) % 2 == 0) ? 1.0 : -1.0;
    signedA.row(j) = 2.0 * sg * A.row(j);
  }
  S.differentials = signedA.transpose().colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(g, g));

  // b-periods: bands above gap j, where sqrt R = i s_l sqrt|R|
  S.im_tau = Eigen::MatrixXd::Zero(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      double acc = 0;
      for (int l = j + 1; l < q; ++l) {
        double sl = ((q - 1 - l) % 2 == 0) ? 1.0 : -1.0;
        double v = 0;
        for (int k = 0; k < g; ++k) v += S.differentials(i, k) * B(l, k);
        acc += sl * v;
      }
      S.im_tau(i, j) = -2.0 * acc;
    }
  S.tau_asymmetry = (S.im_tau - S.im_tau.transpose()).cwiseAbs().maxCoeff();
  S.im_tau = 0.5 * (S.im_tau + S.im_tau.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S.im_tau);
  S.min_eig_im_tau = es.eigenvalues()(0);

  // Abel image of infinity: along the real axis from b_q on the upper sheet, then negated
  S.u_inf.assign(g, 0.0);
  for (int i = 0; i < g; ++i) {
    std::vector<double> ci(g);
    for (int k = 0; k < g; ++k) ci[k] = S.differentials(i, k);
    S.u_inf[i] = -detail::tail_integral(e, [&](double x, double) { return detail::scaled_power_sum(ci, tvar(x)); }, nodes);
  }

  // capacity: int_{b_q}^X P_h / sqrt R = log X - log cap + o(1)
  double tail = detail::tail_integral(
      e,
      [&](double x, double t) {
        double rest = 1;
        for (size_t m = 0; m + 1 < e.size(); ++m) rest *= x - e[m];
        // subtract 1 / (x - b_q + 1) written against the same dx / sqrt R factor
        return hscale * detail::scaled_power_sum(S.harmonic, tvar(x)) - t * std::sqrt(rest) / (t * t + 1.0);
      },
      nodes);
  S.l_sigma = -2.0 * tail;
  return S;
}

struct ThetaEval {
  std::vector<double> x;
  std::complex<double> value;
  int M = 0;
  double tail_bound = 0;
};

namespace detail {

// Bound on the sum of |terms| with |m|_inf > M.
inline double theta_tail(double lam, int g, int M) {
  double s = 0;
  for (int k = M + 1; k < M + 400; ++k) {
    double cnt = std::pow(2.0 * k + 1, g) - std::pow(2.0 * k - 1, g);
    double t = cnt * std::exp(-std::numbers::pi * lam * k * k);
    s += t;
    if (t < 1e-30 * s) break;
  }
  return s;
}

inline std::complex<double> theta_sum(const SurfaceData& S, const std::vector<double>& x, int M) {
  const int g = S.genus;
  std::vector<int> m(g, -M);
  std::complex<double> acc = 0;
  const double pi = std::numbers::pi;
  for (;;) {
    double quad = 0, lin = 0;
    for (int i = 0; i < g; ++i) {
      lin += m[i] * x[i];
      for (int j = 0; j < g; ++j) quad += m[i] * S.im_tau(i, j) * m[j];
    }
    double mag = std::exp(-pi * quad);
    acc += std::complex<double>(mag * std::cos(2 * pi * lin), mag * std::sin(2 * pi * lin));
    int i = 0;
    while (i < g && m[i] == M) m[i++] = -M;
    if (i == g) break;
    ++m[i];
  }
  return acc;
}

}  // namespace detail

inline ThetaEval theta(const std::vector<double>& x, const SurfaceData& S) {
  if (S.genus < 1) throw Error(ErrorCode::InvalidArgument, "riemann", "theta", "genus must be >= 1");
  if (static_cast<int>(x.size()) != S.genus)
    throw Error(ErrorCode::InvalidArgument, "riemann", "theta", "argument has wrong dimension");
  const double lam = S.min_eig_im_tau;
  if (!(lam > 0)) throw Error(ErrorCode::DivergentTruncation, "riemann", "theta", "Im tau is not positive definite");
  ThetaEval T;
  T.x = x;
  int M = 1;
  while (detail::theta_tail(lam, S.genus, M) > 1e-16) {
    if (++M > 200) throw Error(ErrorCode::DivergentTruncation, "riemann", "theta", "truncation radius would exceed 200");
  }
  for (;;) {
    T.value = detail::theta_sum(S, x, M);
    T.tail_bound = detail::theta_tail(lam, S.genus, M);
    if (T.tail_bound < 1e-13 * std::abs(T.value)) break;
    if (++M > 200) throw Error(ErrorCode::DivergentTruncation, "riemann", "theta", "truncation radius would exceed 200");
  }
  T.M = M;
  return T;
}

// Squared off-diagonal coefficient e^{l_sigma} theta(x + U) theta(x - U) / theta(x)^2.
inline double coefficient_map_R(const SurfaceData& S, const std::vector<double>& x) {
  if (S.genus == 0) return std::exp(S.l_sigma);
  std::vector<double> xp(x), xm(x);
  for (int i = 0; i < S.genus; ++i) {
    double a = S.U[i] - std::floor(S.U[i]);
    xp[i] += a;
    xm[i] -= a;
  }
  auto t0 = theta(x, S).value;
  if (std::abs(t0) < 1e-12) throw Error(ErrorCode::ThetaDivisor, "riemann", "coefficient_map_R", "|theta(x)| < 1e-12");
  std::complex<double> v = std::exp(S.l_sigma) * theta(xp, S).value * theta(xm, S).value / (t0 * t0);
  if (std::abs(v.imag()) >= 1e-10 * std::max(1.0, std::abs(v.real())) || !(v.real() > 0))
    throw Error(ErrorCode::IllConditioned, "riemann", "coefficient_map_R", "value is not real positive");
  return v.real();
}

// Distance from U + 2 u_inf to the integer lattice (max norm).
inline double rie_relation_check(const SurfaceData& S) {
  double d = 0;
  for (int i = 0; i < S.genus; ++i) {
    double v = S.U[i] + 2.0 * S.u_inf[i];
    d = std::max(d, std::abs(v - std::round(v)));
  }
  return d;
}

struct ShiftFit {
  std::vector<double> shift;
  int direction = 1;  // orbit step +U or -U
  double residual = 0;
};

// Best x with R(x + k d U) ~ targets_k^2, k = 0..K-1, d = +-1, in the max norm.
inline ShiftFit shift_equivalence_fit(const SurfaceData& S, const std::vector<double>& targets) {
  const int g = S.genus;
  if (static_cast<int>(targets.size()) < 2 * g + 2)
    throw Error(ErrorCode::InvalidArgument, "riemann", "shift_equivalence_fit", "need at least 2(q-1)+2 targets");
  double mean_sq = 0;
  for (double t : targets) mean_sq += t * t;
  mean_sq /= targets.size();
  ShiftFit best;
  best.residual = std::numeric_limits<double>::infinity();
  if (g == 0) {
    best.residual = 0;
    for (double t : targets) best.residual = std::max(best.residual, std::abs(std::exp(S.l_sigma) - t * t));
  } else {
    for (int dir : {1, -1}) {
      auto objective = [&](const std::vector<double>& x) {
        double worst = 0;
        std::vector<double> y(x);
        for (size_t k = 0; k < targets.size(); ++k) {
          for (int i = 0; i < g; ++i) y[i] = x[i] + dir * static_cast<double>(k) * S.U[i];
          double R;
          try {
            R = coefficient_map_R(S, y);
          } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
          }
          worst = std::max(worst, std::abs(R - targets[k] * targets[k]));
        }
        return worst;
      };
      // coarse grid
      int per_dim = g == 1 ? 200 : (g == 2 ? 40 : 12);
      std::vector<int> idx(g, 0);
      std::vector<double> x(g), xb(g);
      double fb = std::numeric_limits<double>::infinity();
      for (;;) {
        for (int i = 0; i < g; ++i) x[i] = static_cast<double>(idx[i]) / per_dim;
        double f = objective(x);
        if (f < fb) {
          fb = f;
          xb = x;
        }
        int i = 0;
        while (i < g && idx[i] == per_dim - 1) idx[i++] = 0;
        if (i == g) break;
        ++idx[i];
      }
      // compass search refinement
      double step = 0.5 / per_dim;
      while (step > 1e-13) {
        bool moved = false;
        for (int i = 0; i < g && !moved; ++i)
          for (double sgn : {1.0, -1.0}) {
            std::vector<double> y(xb);
            y[i] += sgn * step;
            double f = objective(y);
            if (f < fb) {
              fb = f;
              xb = y;
              moved = true;
              break;
            }
          }
        if (!moved) step *= 0.5;
      }
      if (fb < best.residual) {
        best.residual = fb;
        best.direction = dir;
        best.shift = xb;
        for (double& v : best.shift) v -= std::floor(v);
      }
    }
  }
  if (best.residual > 0.1 * mean_sq)
    throw Error(ErrorCode::PoorFit, "riemann", "shift_equivalence_fit",
                "residual " + std::to_string(best.residual) + " exceeds 0.1 mean(target^2)");
  return best;
}

}  // namespace specband
