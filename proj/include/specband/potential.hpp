#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "specband/band_set.hpp"
#include "specband/error.hpp"
#include "specband/polynomial.hpp"
#include "specband/quadrature.hpp"

namespace specband {

enum class PotentialKind { General, Square };

// Confining polynomial potential entering the weight exp(-n V / g).
// Square kind: V = v^2 / (2q) with v of degree q and leading coefficient +-1.
class Potential {
 public:
  static Potential square(std::vector<double> v_coeffs, double g) {
    Potential p;
    p.kind_ = PotentialKind::Square;
    p.v_ = Polynomial(std::move(v_coeffs));
    p.g_ = g;
    if (!(g > 0.0) || !std::isfinite(g)) fail("amplitude g must be positive");
    if (p.v_.degree() < 1) fail("v must have degree >= 1");
    if (std::abs(std::abs(p.v_.leading()) - 1.0) > 1e-12) fail("v must have leading coefficient +1 or -1");
    p.V_ = p.v_ * p.v_ * (1.0 / (2.0 * p.v_.degree()));
    p.edges_ = square_edges(p.v_, g);
    return p;
  }

  static Potential general(std::vector<double> V_coeffs, double g) {
    Potential p;
    p.kind_ = PotentialKind::General;
    p.V_ = Polynomial(std::move(V_coeffs));
    p.g_ = g;
    if (!(g > 0.0) || !std::isfinite(g)) fail("amplitude g must be positive");
    if (p.V_.degree() < 2 || p.V_.degree() % 2 != 0 || !(p.V_.leading() > 0.0))
      fail("V must have even degree >= 2 and positive leading coefficient");
    return p;
  }

  PotentialKind kind() const { return kind_; }
  bool is_square() const { return kind_ == PotentialKind::Square; }
  double g() const { return g_; }
  const Polynomial& V() const { return V_; }
  const Polynomial& v() const {
    require_square("v");
    return v_;
  }
  int q() const {
    require_square("q");
    return v_.degree();
  }
  double operator()(double x) const { return V_(x); }

  Potential with_amplitude(double g) const {
    return is_square() ? square(v_.coeffs(), g) : general(V_.coeffs(), g);
  }

  // Edges of v^2 - 4g = 0 (square kind only).
  const std::vector<double>& square_band_edges() const {
    require_square("bands");
    return edges_;
  }

  void require_square(const char* op) const {
    if (!is_square())
      throw Error(ErrorCode::InvalidArgument, "potential", op, "operation needs a square-kind potential");
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    const auto& c = is_square() ? v_.coeffs() : V_.coeffs();
    os << (is_square() ? "square v=[" : "poly V=[");
    for (size_t i = 0; i < c.size(); ++i) os << (i ? " " : "") << c[i];
    os << "]";
    return os.str();
  }

 private:
  static void fail(const std::string& why) { throw Error(ErrorCode::InvalidArgument, "potential", "Potential", why); }

  static std::vector<double> square_edges(const Polynomial& v, double g) {
    const int q = v.degree();
    const double s = 2.0 * std::sqrt(g);
    std::vector<double> lo = real_roots(v - s, 1e-9);
    std::vector<double> hi = real_roots(v + s, 1e-9);
    if (static_cast<int>(lo.size()) != q || static_cast<int>(hi.size()) != q)
      throw Error(ErrorCode::NotRegular, "potential", "bands_from_polynomial",
                  "v^2 - 4g does not have 2q real roots");
    std::vector<double> e = lo;
    e.insert(e.end(), hi.begin(), hi.end());
    std::sort(e.begin(), e.end());
    for (size_t i = 1; i < e.size(); ++i)
      if (e[i] - e[i - 1] <= 1e-9 * std::max(1.0, std::abs(e[i])))
        throw Error(ErrorCode::NotRegular, "potential", "bands_from_polynomial", "v^2 - 4g has a multiple root");
    return e;
  }

  PotentialKind kind_ = PotentialKind::General;
  Polynomial v_;
  Polynomial V_;
  double g_ = 1.0;
  std::vector<double> edges_;
};

inline BandSet bands_from_polynomial(const Potential& pot) { return BandSet(pot.square_band_edges()); }

namespace detail {

// |prod over edges not bounding band l of (x - e_k)|
inline double other_edges_product(const std::vector<double>& e, size_t l, double x) {
  double p = 1.0;
  for (size_t k = 0; k < e.size(); ++k)
    if (k != 2 * l && k != 2 * l + 1) p *= (x - e[k]);
  return std::abs(p);
}

inline double abs_disc(const std::vector<double>& e, double x) {
  double p = 1.0;
  for (double ek : e) p *= (x - ek);
  return std::abs(p);
}

}  // namespace detail

// Equilibrium density of the external-field problem (tail function N_g).
inline double density_N(const Potential& pot, double x) {
  const auto& e = pot.square_band_edges();
  BandSet bs(e);
  if (!bs.contains(x)) return 0.0;
  const int q = pot.q();
  return std::abs(pot.v().derivative()(x)) / (2.0 * std::numbers::pi * pot.g() * q) *
         std::sqrt(detail::abs_disc(e, x));
}

// Equilibrium density of the fixed-support problem on sigma_g.
inline double density_nu(const Potential& pot, double x) {
  const auto& e = pot.square_band_edges();
  BandSet bs(e);
  if (!bs.contains(x)) return 0.0;
  double d = detail::abs_disc(e, x);
  if (d < 1e-14) throw Error(ErrorCode::EdgeSingularity, "potential", "density_nu", "point at a band edge");
  return std::abs(pot.v().derivative()(x)) / (std::numbers::pi * pot.q() * std::sqrt(d));
}

struct CombPoint {
  std::optional<size_t> band;  // 0-based
  std::optional<size_t> gap;   // 0-based, bounded gaps only
  double theta_plus = 0.0;
  double kappa = 0.0;
};

struct CombMap {
  BandSet bands;
  std::vector<double> gap_heights;  // max of kappa over each bounded gap
};

namespace detail {

// Points within rounding distance of an edge are moved onto it.
inline double snap_to_edge(const std::vector<double>& e, double x) {
  for (double ek : e)
    if (std::abs(x - ek) <= 1e-12 * std::max(1.0, std::abs(ek))) return ek;
  return x;
}

inline CombPoint comb_point(const Potential& pot, double x) {
  const auto& e = pot.square_band_edges();
  BandSet bs(e);
  x = snap_to_edge(e, x);
  const int q = pot.q();
  const double pi = std::numbers::pi;
  const double u = pot.v()(x) / (2.0 * std::sqrt(pot.g()));
  CombPoint c;
  if (auto l = bs.band_index(x)) {
    c.band = *l;
    // 1 - u^2 from the factored discriminant stays accurate near the edges
    double ac = std::atan2(std::sqrt(abs_disc(e, x) / (4.0 * pot.g())), u);
    double mid = 0.5 * (bs.a(*l) + bs.b(*l));
    bool increasing = pot.v().derivative()(mid) > 0.0;
    double base = (-q + static_cast<double>(*l)) * pi;
    c.theta_plus = increasing ? base + pi - ac : base + ac;
    return c;
  }
  c.kappa = std::acosh(std::max(1.0, std::abs(u)));
  if (x > bs.upper()) {
    c.theta_plus = 0.0;
  } else if (x < bs.lower()) {
    c.theta_plus = -q * pi;
  } else {
    size_t g = *bs.gap_index(x);
    c.gap = g;
    c.theta_plus = (-q + static_cast<double>(g) + 1.0) * pi;
  }
  return c;
}

}  // namespace detail

inline CombMap comb_map(const Potential& pot) {
  CombMap m{bands_from_polynomial(pot), {}};
  std::vector<double> crit = real_roots(pot.v().derivative(), 1e-12);
  const double s = 2.0 * std::sqrt(pot.g());
  for (size_t l = 0; l + 1 < m.bands.q(); ++l) {
    double h = 0.0;
    for (double c : crit)
      if (c > m.bands.b(l) && c < m.bands.a(l + 1)) h = std::max(h, std::acosh(std::max(1.0, std::abs(pot.v()(c)) / s)));
    m.gap_heights.push_back(h);
  }
  return m;
}

// Boundary value of the comb map on the spectrum.
inline CombPoint comb_theta_plus(const Potential& pot, double x) {
  if (!BandSet(pot.square_band_edges()).contains(detail::snap_to_edge(pot.square_band_edges(), x)))
    throw Error(ErrorCode::OutsideSpectrum, "potential", "comb_theta_plus", "point is not in the spectrum");
  return detail::comb_point(pot, x);
}

// Comb map sample at any real point: theta on bands, kappa on gaps.
inline CombPoint comb_sample(const Potential& pot, double x) { return detail::comb_point(pot, x); }

struct CountingValues {
  double N;
  double nu;
};

// Tail functions N_g((x, inf)) and nu_g((x, inf)).
inline CountingValues counting_functions(const Potential& pot, double x) {
  const double pi = std::numbers::pi;
  double t = comb_theta_plus(pot, x).theta_plus;
  double q = pot.q();
  return {-(t - 0.5 * std::sin(2.0 * t)) / (pi * q), -t / (pi * q)};
}

// Same tail functions extended to the whole line.
inline CountingValues counting_functions_any(const Potential& pot, double x) {
  const double pi = std::numbers::pi;
  double t = comb_sample(pot, x).theta_plus;
  double q = pot.q();
  return {-(t - 0.5 * std::sin(2.0 * t)) / (pi * q), -t / (pi * q)};
}

// Phi(x) + l_V: zero on the spectrum, positive off it.
inline double phi_gap_value(const Potential& pot, double x) {
  CombPoint c = comb_sample(pot, x);
  if (c.band) return 0.0;
  double k = c.kappa;
  return (2.0 / pot.q()) * (0.5 * std::sinh(2.0 * k) - k);
}

// Closed-form Lagrange constants of the square class.
inline double robin_external(const Potential& pot) { return (std::log(pot.g()) - 1.0) / pot.q(); }
inline double robin_support(const Potential& pot) { return std::log(pot.g()) / pot.q(); }

// Absolutely continuous measure on a BandSet with density
// h_l(x) * ((x - a_l)(b_l - x))^p on band l, p = +1/2 or -1/2.
struct BandMeasure {
  BandSet bands;
  double edge_power = -0.5;
  std::function<double(size_t, double)> smooth;
  int nodes = 200;

  // weight in the angle variable x = c + H cos(phi)
  double angular(size_t l, double phi, double x) const {
    double H = 0.5 * (bands.b(l) - bands.a(l));
    double h = smooth(l, x);
    if (edge_power > 0) {
      double s = H * std::sin(phi);
      return h * s * s;
    }
    return h;
  }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (size_t l = 0; l < bands.q(); ++l)
      s += integrate_arcsine([&](double phi, double x) { return f(x) * angular(l, phi, x); }, bands.a(l), bands.b(l),
                             nodes);
    return s;
  }

  double mass(size_t l) const {
    return integrate_arcsine([&](double phi, double x) { return angular(l, phi, x); }, bands.a(l), bands.b(l), nodes);
  }

  double total_mass() const {
    double s = 0.0;
    for (size_t l = 0; l < bands.q(); ++l) s += mass(l);
    return s;
  }

  double density(double x) const {
    auto l = bands.band_index(x);
    if (!l) return 0.0;
    double t = (x - bands.a(*l)) * (bands.b(*l) - x);
    return smooth(*l, x) * std::pow(t, edge_power);
  }

  // Mass of (x, infinity).
  double tail(double x) const {
    double s = 0.0;
    for (size_t l = 0; l < bands.q(); ++l) {
      double a = bands.a(l), b = bands.b(l);
      if (x <= a) {
        s += mass(l);
      } else if (x < b) {
        double c = 0.5 * (a + b), H = 0.5 * (b - a);
        double px = std::acos(std::clamp((x - c) / H, -1.0, 1.0));
        s += integrate_gl([&](double phi) { return angular(l, phi, c + H * std::cos(phi)); }, 0.0, px, nodes);
      }
    }
    return s;
  }

  // Integral of log|x - mu| against the measure.
  double log_potential(double x) const {
    double s = 0.0;
    for (size_t l = 0; l < bands.q(); ++l) {
      double a = bands.a(l), b = bands.b(l);
      double c = 0.5 * (a + b), H = 0.5 * (b - a);
      auto w = [&](double phi) { return angular(l, phi, c + H * std::cos(phi)); };
      if (x > a && x < b) {
        // x - mu = -2H sin((px + phi)/2) sin((px - phi)/2)
        double px = std::acos(std::clamp((x - c) / H, -1.0, 1.0));
        auto f = [&](double phi, double dlo, double dhi, bool left) {
          double diff = left ? dhi : -dlo;  // px - phi
          double val = std::log(2.0 * H) + std::log(std::abs(std::sin(0.5 * (px + phi)))) +
                       std::log(std::abs(std::sin(0.5 * diff)));
          return val * w(phi);
        };
        s += tanh_sinh([&](double phi, double dl, double dh) { return f(phi, dl, dh, true); }, 0.0, px);
        s += tanh_sinh([&](double phi, double dl, double dh) { return f(phi, dl, dh, false); }, px, std::numbers::pi);
      } else {
        s += tanh_sinh(
            [&](double phi, double, double) {
              double mu = c + H * std::cos(phi);
              return std::log(std::abs(x - mu)) * w(phi);
            },
            0.0, std::numbers::pi);
      }
    }
    return s;
  }
};

// nu_g for the square class as a BandMeasure.
inline BandMeasure nu_measure(const Potential& pot) {
  auto e = pot.square_band_edges();
  Polynomial dv = pot.v().derivative();
  double q = pot.q();
  BandMeasure m;
  m.bands = BandSet(e);
  m.edge_power = -0.5;
  m.smooth = [e, dv, q](size_t l, double x) {
    return std::abs(dv(x)) / (std::numbers::pi * q * std::sqrt(detail::other_edges_product(e, l, x)));
  };
  return m;
}

// N_g for the square class as a BandMeasure.
inline BandMeasure N_measure(const Potential& pot) {
  auto e = pot.square_band_edges();
  Polynomial dv = pot.v().derivative();
  double q = pot.q(), g = pot.g();
  BandMeasure m;
  m.bands = BandSet(e);
  m.edge_power = 0.5;
  m.smooth = [e, dv, q, g](size_t l, double x) {
    return std::abs(dv(x)) * std::sqrt(detail::other_edges_product(e, l, x)) / (2.0 * std::numbers::pi * g * q);
  };
  return m;
}

// Arcsine law of a single interval (equilibrium measure of [a, b]).
inline BandMeasure arcsine_measure(double a, double b) {
  BandMeasure m;
  m.bands = BandSet({a, b});
  m.edge_power = -0.5;
  m.smooth = [](size_t, double) { return 1.0 / std::numbers::pi; };
  return m;
}

}  // namespace specband
