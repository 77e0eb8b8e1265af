#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <type_traits>
#include <utility>
#include <vector>

#include "specband/band_set.hpp"
#include "specband/error.hpp"
#include "specband/parallel.hpp"
#include "specband/polynomial.hpp"
#include "specband/potential.hpp"
#include "specband/recurrence_table.hpp"

namespace specband {

enum class JacobiKind { Periodic, Window };

// Doubly infinite Jacobi matrix: r_k couples sites k and k+1, s_k is the diagonal.
class JacobiOperator {
 public:
  static JacobiOperator periodic(std::vector<double> r, std::vector<double> s) {
    if (r.empty() || r.size() != s.size())
      throw Error(ErrorCode::InvalidArgument, "jacobi", "JacobiOperator", "periodic coefficients need equal nonzero length");
    for (double x : r)
      if (!(x > 0)) throw Error(ErrorCode::InvalidArgument, "jacobi", "JacobiOperator", "r entries must be positive");
    JacobiOperator J;
    J.kind_ = JacobiKind::Periodic;
    J.r_ = std::move(r);
    J.s_ = std::move(s);
    return J;
  }

  JacobiKind kind() const { return kind_; }
  int period() const {
    require_periodic("period");
    return static_cast<int>(r_.size());
  }
  int offset() const { return n_; }
  long k_min() const { return k_min_; }
  long k_max() const { return k_min_ + static_cast<long>(r_.size()) - 1; }
  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& s() const { return s_; }

  double r_at(long k) const { return kind_ == JacobiKind::Periodic ? r_[mod(k)] : r_[window_index(k)]; }
  double s_at(long k) const { return kind_ == JacobiKind::Periodic ? s_[mod(k)] : s_[window_index(k)]; }

  void require_periodic(const char* op) const {
    if (kind_ != JacobiKind::Periodic)
      throw Error(ErrorCode::InvalidArgument, "jacobi", op, "operation needs a periodic operator");
  }

  // Window of a recurrence table around l = n; indices below -n are zero filled.
  static JacobiOperator window(const RecurrenceTable& t, int n, long k_min, long k_max) {
    if (k_max < k_min) throw Error(ErrorCode::InvalidArgument, "jacobi", "window_operator", "empty k range");
    if (n + k_max > t.l_max())
      throw Error(ErrorCode::RangeExceeded, "jacobi", "window_operator", "window reaches beyond the table");
    JacobiOperator J;
    J.kind_ = JacobiKind::Window;
    J.n_ = n;
    J.k_min_ = k_min;
    for (long k = k_min; k <= k_max; ++k) {
      bool inside = n + k >= 0;
      J.r_.push_back(inside ? t.r[n + k] : 0.0);
      J.s_.push_back(inside ? t.s[n + k] : 0.0);
    }
    return J;
  }

 private:
  size_t mod(long k) const {
    long p = static_cast<long>(r_.size());
    return static_cast<size_t>(((k % p) + p) % p);
  }
  size_t window_index(long k) const {
    if (k < k_min_ || k > k_max())
      throw Error(ErrorCode::RangeExceeded, "jacobi", "JacobiOperator", "index outside the window");
    return static_cast<size_t>(k - k_min_);
  }

  JacobiKind kind_ = JacobiKind::Periodic;
  std::vector<double> r_;
  std::vector<double> s_;
  int n_ = 0;
  long k_min_ = 0;
};

inline JacobiOperator window_operator(const RecurrenceTable& t, int n, long k_min, long k_max) {
  return JacobiOperator::window(t, n, k_min, k_max);
}

// Canonical periodic representative with spectrum sigma_g of a square potential,
// for q = 1 (constant coefficients) and q = 2 (period two).
inline JacobiOperator periodic_from_square(const Potential& pot) {
  pot.require_square("periodic_from_square");
  const Polynomial& v = pot.v();
  const double lead = v.leading();
  const double g = pot.g();
  if (pot.q() == 1) {
    double center = -v.coeff(0) / lead;
    return JacobiOperator::periodic({std::sqrt(g)}, {center});
  }
  if (pot.q() == 2) {
    // lead * v = (x + b/2)^2 + v0
    double b = v.coeff(1) / lead, c = v.coeff(0) / lead;
    double v0 = c - 0.25 * b * b;
    double a2 = -v0 - 2.0 * std::sqrt(g), b2 = -v0 + 2.0 * std::sqrt(g);
    if (!(a2 > 0)) throw Error(ErrorCode::NotRegular, "jacobi", "periodic_from_square", "bands touch at the centre");
    double ea = std::sqrt(a2), eb = std::sqrt(b2);
    return JacobiOperator::periodic({0.5 * (eb + ea), 0.5 * (eb - ea)}, {-0.5 * b, -0.5 * b});
  }
  throw Error(ErrorCode::InvalidArgument, "jacobi", "periodic_from_square", "closed form only for q = 1, 2");
}

namespace detail {

// Number of eigenvalues below x of the tridiagonal matrix (diag d, offdiag e).
inline size_t sturm_count(const std::vector<double>& d, const std::vector<double>& e2, double x, double pivmin) {
  size_t c = 0;
  double q = d[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++c;
  for (size_t i = 1; i < d.size(); ++i) {
    q = (d[i] - x) - e2[i - 1] / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++c;
  }
  return c;
}

struct Section {
  std::vector<double> d, e, e2;
  double lo, hi, pivmin;
};

inline Section section(const JacobiOperator& op, size_t m, long k0) {
  Section S;
  S.d.resize(m);
  S.e.resize(m > 0 ? m - 1 : 0);
  for (size_t i = 0; i < m; ++i) S.d[i] = op.s_at(k0 + static_cast<long>(i));
  for (size_t i = 0; i + 1 < m; ++i) S.e[i] = op.r_at(k0 + static_cast<long>(i));
  S.e2.resize(S.e.size());
  double emax = 0;
  S.lo = 1e300;
  S.hi = -1e300;
  for (size_t i = 0; i < m; ++i) {
    double rad = (i > 0 ? std::abs(S.e[i - 1]) : 0.0) + (i + 1 < m ? std::abs(S.e[i]) : 0.0);
    S.lo = std::min(S.lo, S.d[i] - rad);
    S.hi = std::max(S.hi, S.d[i] + rad);
  }
  for (size_t i = 0; i < S.e.size(); ++i) {
    S.e2[i] = S.e[i] * S.e[i];
    emax = std::max(emax, S.e2[i]);
  }
  S.pivmin = std::numeric_limits<double>::min() * std::max(1.0, emax);
  double pad = 1e-12 * std::max(1.0, std::max(std::abs(S.lo), std::abs(S.hi)));
  S.lo -= pad;
  S.hi += pad;
  return S;
}

}  // namespace detail

// Eigenvalues of the m x m Dirichlet section on sites k0..k0+m-1 by Sturm bisection.
inline std::vector<double> truncation_spectrum(const JacobiOperator& op, size_t m, long k0 = 0, int workers = 1) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "jacobi", "truncation_spectrum", "m must be >= 1");
  detail::Section S = detail::section(op, m, k0);
  std::vector<double> ev(m);
  if (m == 1) {
    ev[0] = S.d[0];
    return ev;
  }
  const double scale = std::max(std::abs(S.lo), std::abs(S.hi));
  parallel_for(m, workers, [&](size_t k) {
    // k-th smallest eigenvalue: count(x) <= k < count(hi)
    double a = S.lo, b = S.hi;
    while (b - a > 1e-14 * std::max(1.0, scale)) {
      double c = 0.5 * (a + b);
      if (c <= a || c >= b) break;
      if (detail::sturm_count(S.d, S.e2, c, S.pivmin) > k)
        b = c;
      else
        a = c;
    }
    ev[k] = 0.5 * (a + b);
  });
  return ev;
}

// Tail counting function #{eigenvalues > x} / m of the m x m section.
inline std::vector<double> ids_estimate(const JacobiOperator& op, size_t m, const std::vector<double>& grid,
                                        long k0 = 0) {
  detail::Section S = detail::section(op, m, k0);
  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid) {
    // count of eigenvalues <= x equals count below the next representable number
    double xp = std::nextafter(x, std::numeric_limits<double>::infinity());
    size_t below = m == 1 ? (S.d[0] < xp ? 1 : 0) : detail::sturm_count(S.d, S.e2, xp, S.pivmin);
    out.push_back(static_cast<double>(m - below) / m);
  }
  return out;
}

// Half trace of the one-period transfer matrix.
inline double discriminant_value(const JacobiOperator& op, double x) {
  op.require_periodic("hill_discriminant");
  const int p = op.period();
  double a = 1, b = 0, c = 0, d = 1;  // running product, rows (a b; c d)
  for (int j = 0; j < p; ++j) {
    double t11 = (x - op.s_at(j)) / op.r_at(j), t12 = -op.r_at(j - 1) / op.r_at(j);
    double na = t11 * a + t12 * c, nb = t11 * b + t12 * d;
    c = a;
    d = b;
    a = na;
    b = nb;
  }
  return 0.5 * (a + d);
}

struct HillData {
  Polynomial discriminant;
  BandSet bands;
};

namespace detail {

// Sorted edges {|Delta| = 1}; touching roots appear twice and close a gap.
inline BandSet bands_from_discriminant(const Polynomial& D) {
  std::vector<double> e = real_roots(D - 1.0, 1e-10);
  std::vector<double> f = real_roots(D + 1.0, 1e-10);
  e.insert(e.end(), f.begin(), f.end());
  std::sort(e.begin(), e.end());
  if (e.size() != 2 * static_cast<size_t>(D.degree()))
    throw Error(ErrorCode::IllConditioned, "jacobi", "hill_discriminant", "could not isolate all band edges");
  std::vector<double> merged;
  for (size_t i = 0; i < e.size(); i += 2) {
    if (!merged.empty() && e[i] - merged.back() <= 1e-9 * std::max(1.0, std::abs(e[i]))) {
      merged.back() = e[i + 1];
    } else {
      merged.push_back(e[i]);
      merged.push_back(e[i + 1]);
    }
  }
  return BandSet(merged);
}

}  // namespace detail

// Discriminant as a polynomial (exact interpolation at p + 1 Chebyshev points) and its bands.
inline HillData hill_discriminant(const JacobiOperator& op) {
  op.require_periodic("hill_discriminant");
  const int p = op.period();
  double S = 0;
  for (int j = 0; j < p; ++j) S = std::max(S, std::abs(op.s_at(j)) + 2 * op.r_at(j));
  Eigen::MatrixXd Vm(p + 1, p + 1);
  Eigen::VectorXd rhs(p + 1);
  for (int i = 0; i <= p; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.5) / (p + 1));
    for (int k = 0; k <= p; ++k) Vm(i, k) = std::pow(t, k);
    rhs(i) = discriminant_value(op, S * t);
  }
  Eigen::VectorXd c = Vm.colPivHouseholderQr().solve(rhs);
  std::vector<double> coeffs(p + 1);
  for (int k = 0; k <= p; ++k) coeffs[k] = c(k) / std::pow(S, k);
  // the leading coefficient is known exactly
  double lead = 1.0;
  for (int j = 0; j < p; ++j) lead /= op.r_at(j);
  coeffs[p] = 0.5 * lead;
  Polynomial D(coeffs);
  return {D, detail::bands_from_discriminant(D)};
}

// Lyapunov exponent. Periodic operators use the monodromy eigenvalue; windows use
// products over `steps` sites from k_min, renormalized every 32 steps.
inline double lyapunov_exponent(const JacobiOperator& op, double x, long steps = 0) {
  if (op.kind() == JacobiKind::Periodic) {
    double D = std::abs(discriminant_value(op, x));
    if (D <= 1.0) return 0.0;
    return std::acosh(D) / op.period();
  }
  long k0 = std::max<long>(op.k_min(), -static_cast<long>(op.offset())) + 1;
  if (steps <= 0) steps = op.k_max() - k0;
  if (k0 + steps > op.k_max())
    throw Error(ErrorCode::RangeExceeded, "jacobi", "lyapunov_exponent", "not enough coefficients in the window");
  double a = 1, b = 0, c = 0, d = 1, logn = 0;
  for (long k = k0; k < k0 + steps; ++k) {
    double t11 = (x - op.s_at(k)) / op.r_at(k), t12 = -op.r_at(k - 1) / op.r_at(k);
    double na = t11 * a + t12 * c, nb = t11 * b + t12 * d;
    c = a;
    d = b;
    a = na;
    b = nb;
    if ((k - k0) % 32 == 31) {
      double nrm = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
      logn += std::log(nrm);
      a /= nrm;
      b /= nrm;
      c /= nrm;
      d /= nrm;
    }
  }
  double nrm = std::sqrt(a * a + b * b + c * c + d * d);
  return (logn + std::log(nrm)) / static_cast<double>(steps);
}

// Lyapunov exponent from a discriminant polynomial of period p.
inline double lyapunov_from_discriminant(const Polynomial& D, int p, double x) {
  double v = std::abs(D(x));
  return v <= 1.0 ? 0.0 : std::acosh(v) / p;
}

// sup over samples of |gamma(x) - (-<log r> + int log|x - mu| nu(dmu))|.
template <class LogPotential>
  requires std::is_invocable_r_v<double, LogPotential, double>
double thouless_check(const JacobiOperator& op, LogPotential&& log_potential, const std::vector<double>& samples) {
  op.require_periodic("thouless_check");
  double mlog = 0;
  for (int j = 0; j < op.period(); ++j) mlog += std::log(op.r_at(j));
  mlog /= op.period();
  double sup = 0;
  for (double x : samples) sup = std::max(sup, std::abs(lyapunov_exponent(op, x) - (-mlog + log_potential(x))));
  return sup;
}

inline double thouless_check(const JacobiOperator& op, const BandMeasure& nu, const std::vector<double>& samples) {
  return thouless_check(op, [&](double x) { return nu.log_potential(x); }, samples);
}

namespace detail {

// LU of the complex tridiagonal J - z; pivots stay away from zero when Im z != 0.
struct TridiagLU {
  std::vector<std::complex<double>> piv, l;
  std::vector<double> e;

  TridiagLU(const std::vector<double>& d, const std::vector<double>& off, std::complex<double> z) : e(off) {
    size_t m = d.size();
    piv.resize(m);
    l.resize(m > 0 ? m - 1 : 0);
    piv[0] = d[0] - z;
    for (size_t i = 1; i < m; ++i) {
      l[i - 1] = e[i - 1] / piv[i - 1];
      piv[i] = (d[i] - z) - l[i - 1] * e[i - 1];
    }
  }

  std::vector<std::complex<double>> solve(std::vector<std::complex<double>> b) const {
    size_t m = piv.size();
    for (size_t i = 1; i < m; ++i) b[i] -= l[i - 1] * b[i - 1];
    b[m - 1] /= piv[m - 1];
    for (size_t i = m - 1; i-- > 0;) b[i] = (b[i] - e[i] * b[i + 1]) / piv[i];
    return b;
  }
};

}  // namespace detail

using IndexPair = std::pair<long, long>;

// Entries (J_m - z)^{-1}_{jk} of the m x m section on sites -m/2 .. m/2 - 1.
// With derivative_order = 1 returns entries of (J_m - z)^{-2} instead.
inline std::vector<std::complex<double>> resolvent_entries(const JacobiOperator& op, std::complex<double> z, size_t m,
                                                           const std::vector<IndexPair>& idx,
                                                           int derivative_order = 0) {
  if (std::abs(z.imag()) < 1e-8)
    throw Error(ErrorCode::SpectralParameterOnAxis, "jacobi", "resolvent_entries", "|Im z| < 1e-8");
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "jacobi", "resolvent_entries", "m must be >= 2");
  const long k0 = -static_cast<long>(m / 2);
  std::vector<double> d(m), e(m - 1);
  for (size_t i = 0; i < m; ++i) d[i] = op.s_at(k0 + static_cast<long>(i));
  for (size_t i = 0; i + 1 < m; ++i) e[i] = op.r_at(k0 + static_cast<long>(i));
  detail::TridiagLU lu(d, e, z);
  std::map<long, std::vector<std::complex<double>>> cols;
  std::vector<std::complex<double>> out;
  for (auto [j, k] : idx) {
    if (j - k0 < 0 || j - k0 >= static_cast<long>(m) || k - k0 < 0 || k - k0 >= static_cast<long>(m))
      throw Error(ErrorCode::RangeExceeded, "jacobi", "resolvent_entries", "index outside the section");
    auto it = cols.find(k);
    if (it == cols.end()) {
      std::vector<std::complex<double>> b(m, 0.0);
      b[static_cast<size_t>(k - k0)] = 1.0;
      auto x = lu.solve(std::move(b));
      if (derivative_order == 1) x = lu.solve(std::move(x));
      it = cols.emplace(k, std::move(x)).first;
    }
    out.push_back(it->second[static_cast<size_t>(j - k0)]);
  }
  return out;
}

}  // namespace specband
