#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <vector>

#include "specband/error.hpp"

namespace specband {

// Real polynomial, coefficients in ascending order.
class Polynomial {
 public:
  Polynomial() : c_{0.0} {}
  Polynomial(std::initializer_list<double> c) : c_(c) { trim(); }
  explicit Polynomial(std::vector<double> c) : c_(std::move(c)) { trim(); }

  static Polynomial monomial(int k, double a = 1.0) {
    std::vector<double> c(static_cast<size_t>(k) + 1, 0.0);
    c.back() = a;
    return Polynomial(std::move(c));
  }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }
  double coeff(int k) const { return k >= 0 && k <= degree() ? c_[k] : 0.0; }
  double leading() const { return c_.back(); }

  double operator()(double x) const {
    double r = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
    return r;
  }

  template <class T>
  T eval(const T& x) const {
    T r = T(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + T(*it);
    return r;
  }

  Polynomial derivative() const {
    if (c_.size() <= 1) return Polynomial();
    std::vector<double> d(c_.size() - 1);
    for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
    return Polynomial(std::move(d));
  }

  Polynomial operator+(const Polynomial& o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (size_t k = 0; k < c_.size(); ++k) r[k] += c_[k];
    for (size_t k = 0; k < o.c_.size(); ++k) r[k] += o.c_[k];
    return Polynomial(std::move(r));
  }
  Polynomial operator-(const Polynomial& o) const { return *this + o * -1.0; }
  Polynomial operator*(double a) const {
    std::vector<double> r = c_;
    for (auto& x : r) x *= a;
    return Polynomial(std::move(r));
  }
  Polynomial operator*(const Polynomial& o) const {
    std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
    for (size_t i = 0; i < c_.size(); ++i)
      for (size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return Polynomial(std::move(r));
  }
  Polynomial operator+(double a) const {
    std::vector<double> r = c_;
    r[0] += a;
    return Polynomial(std::move(r));
  }
  Polynomial operator-(double a) const { return *this + (-a); }

  // Cauchy bound on the modulus of the roots.
  double root_bound() const {
    double m = 0.0;
    for (int k = 0; k < degree(); ++k) m = std::max(m, std::abs(c_[k] / leading()));
    return 1.0 + m;
  }

 private:
  void trim() {
    if (c_.empty()) c_.push_back(0.0);
    while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
  }
  std::vector<double> c_;
};

namespace detail {

// Root of p in [lo, hi] given a sign change; Newton steps guarded by bisection.
inline double bracketed_root(const Polynomial& p, const Polynomial& dp, double lo, double hi) {
  double flo = p(lo);
  if (flo == 0.0) return lo;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double fx = p(x);
    if (fx == 0.0) return x;
    if ((fx < 0) == (flo < 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    double d = dp(x);
    double xn = d != 0.0 ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)) ||
        hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
      return xn;
    x = xn;
  }
  return x;
}

inline double coeff_scale(const Polynomial& p, double x) {
  double s = 0.0, xa = std::abs(x), pw = 1.0;
  for (double c : p.coeffs()) {
    s += std::abs(c) * pw;
    pw *= xa;
  }
  return s;
}

}  // namespace detail

// Sorted real roots. Odd-multiplicity roots come from sign changes between
// critical points; a critical point where p vanishes to within touch_tol
// (relative to the coefficient scale) is reported twice as a touching root.
inline std::vector<double> real_roots(const Polynomial& p, double touch_tol = 1e-12) {
  int d = p.degree();
  std::vector<double> out;
  if (d <= 0) return out;
  if (d == 1) {
    out.push_back(-p.coeff(0) / p.coeff(1));
    return out;
  }
  Polynomial dp = p.derivative();
  std::vector<double> crit = real_roots(dp, touch_tol);
  double B = p.root_bound();
  std::vector<double> pts;
  pts.push_back(-B);
  for (double c : crit)
    if (c > -B && c < B) pts.push_back(c);
  pts.push_back(B);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    double a = pts[i], b = pts[i + 1];
    double fa = p(a), fb = p(b);
    if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) out.push_back(detail::bracketed_root(p, dp, a, b));
  }
  for (size_t i = 1; i + 1 < pts.size(); ++i) {
    double c = pts[i];
    double fc = p(c);
    if (std::abs(fc) <= touch_tol * detail::coeff_scale(p, c)) {
      bool near_existing = false;
      for (double r : out)
        if (std::abs(r - c) <= 1e-9 * std::max(1.0, std::abs(c))) near_existing = true;
      if (!near_existing) {
        out.push_back(c);
        out.push_back(c);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace specband
