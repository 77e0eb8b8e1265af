#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "specband/band_set.hpp"
#include "specband/error.hpp"
#include "specband/jacobi.hpp"
#include "specband/parallel.hpp"
#include "specband/potential.hpp"
#include "specband/quadrature.hpp"

namespace specband {

// Piecewise-constant measure: weight w_i spread uniformly over cell i.
struct DiscreteMeasure {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> cell_lo;
  std::vector<double> cell_hi;

  size_t size() const { return nodes.size(); }
  double total_mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
  double width(size_t i) const { return cell_hi[i] - cell_lo[i]; }
  double density(size_t i) const { return weights[i] / width(i); }

  void validate() const {
    if (weights.size() != nodes.size() || cell_lo.size() != nodes.size() || cell_hi.size() != nodes.size())
      throw Error(ErrorCode::InvalidArgument, "equilibrium", "DiscreteMeasure", "length mismatch");
    for (size_t i = 0; i < size(); ++i) {
      if (weights[i] < 0) throw Error(ErrorCode::InvalidArgument, "equilibrium", "DiscreteMeasure", "negative weight");
      if (i > 0 && !(nodes[i] > nodes[i - 1]))
        throw Error(ErrorCode::InvalidArgument, "equilibrium", "DiscreteMeasure", "nodes not increasing");
    }
    if (std::abs(total_mass() - 1.0) > 1e-12)
      throw Error(ErrorCode::InvalidArgument, "equilibrium", "DiscreteMeasure", "mass is not 1");
  }

  // Uniform cells on each band of sigma, `per_band` cells per band.
  static DiscreteMeasure on_bands(const BandSet& s, int per_band) {
    DiscreteMeasure m;
    for (size_t l = 0; l < s.q(); ++l) {
      double h = (s.b(l) - s.a(l)) / per_band;
      for (int i = 0; i < per_band; ++i) {
        m.cell_lo.push_back(s.a(l) + i * h);
        m.cell_hi.push_back(i + 1 == per_band ? s.b(l) : s.a(l) + (i + 1) * h);
        m.nodes.push_back(s.a(l) + (i + 0.5) * h);
      }
    }
    m.weights.assign(m.nodes.size(), 1.0 / m.nodes.size());
    return m;
  }

  static DiscreteMeasure uniform_grid(double a, double b, int cells) {
    return on_bands(BandSet({a, b}), cells);
  }
};

struct SolverParams {
  int max_iterations = 20000;
  double tolerance = 5e-3;
  // the solver stops once the Euler-Lagrange residual is below target_fraction * tolerance
  double target_fraction = 0.02;
  int check_every = 10;
  int workers = 1;
};

struct EquilibriumResult {
  DiscreteMeasure measure;
  BandSet support;
  double lagrange_constant = 0.0;
  double el_residual_sup = 0.0;
  double el_min_slack = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  std::vector<double> energy_history;
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& op, EquilibriumResult partial)
      : Error(ErrorCode::NoConvergence, "equilibrium", op, "iteration cap reached"), partial_(std::move(partial)) {}
  const EquilibriumResult& partial() const { return partial_; }

 private:
  EquilibriumResult partial_;
};

namespace detail {

// F'' = log|t|
inline long double log_kernel_F(long double t) {
  if (t == 0.0L) return 0.0L;
  return 0.5L * t * t * std::log(std::abs(t)) - 0.75L * t * t;
}

// Average of -log|x - y| over cell i times cell j.
inline double cell_log_average(double a1, double b1, double a2, double b2) {
  long double v = log_kernel_F((long double)b1 - a2) - log_kernel_F((long double)a1 - a2) -
                  log_kernel_F((long double)b1 - b2) + log_kernel_F((long double)a1 - b2);
  return static_cast<double>(-v / (((long double)b1 - a1) * ((long double)b2 - a2)));
}

inline bool uniform_cells(const DiscreteMeasure& m) {
  double h0 = m.width(0);
  for (size_t i = 1; i < m.size(); ++i)
    if (std::abs(m.width(i) - h0) > 1e-12 * h0 || std::abs(m.cell_lo[i] - m.cell_hi[i - 1]) > 1e-12 * h0) return false;
  return true;
}

inline Eigen::MatrixXd log_kernel_matrix(const DiscreteMeasure& m, int workers) {
  const size_t M = m.size();
  Eigen::MatrixXd A(M, M);
  if (uniform_cells(m)) {
    const double h = m.width(0);
    std::vector<double> t(M);
    for (size_t k = 0; k < M; ++k) t[k] = cell_log_average(k * h, (k + 1) * h, 0.0, h);
    for (size_t i = 0; i < M; ++i)
      for (size_t j = 0; j < M; ++j) A(i, j) = t[i > j ? i - j : j - i];
    return A;
  }
  parallel_for(M, workers, [&](size_t i) {
    for (size_t j = 0; j < M; ++j) A(i, j) = cell_log_average(m.cell_lo[i], m.cell_hi[i], m.cell_lo[j], m.cell_hi[j]);
  });
  return A;
}

// Cell average of V/g.
inline Eigen::VectorXd field_vector(const DiscreteMeasure& m, const Potential& V) {
  static const NodesWeights gl = gauss_legendre(4);
  Eigen::VectorXd f(m.size());
  for (size_t i = 0; i < m.size(); ++i) {
    double c = 0.5 * (m.cell_lo[i] + m.cell_hi[i]), h = 0.5 * m.width(i), s = 0;
    for (int k = 0; k < 4; ++k) s += gl.w[k] * V(c + h * gl.x[k]);
    f(i) = 0.5 * s / V.g();
  }
  return f;
}

// Euclidean projection onto the probability simplex (sort based).
inline void project_simplex(Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0, theta = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    css += u[k];
    double t = (css - 1.0) / (k + 1);
    if (u[k] - t > 0) theta = t;
  }
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::max(v(i) - theta, 0.0);
}

struct Residuals {
  double l;
  double sup_on;
  double min_off;
};

// Phi = f + 2 A w; the constant l = -mean_w(Phi) over support nodes.
inline Residuals residuals_from_phi(const Eigen::VectorXd& phi, const Eigen::VectorXd& w, double thresh) {
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > thresh) {
      num += w(i) * phi(i);
      den += w(i);
    }
  double l = -num / den;
  double sup = 0, slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    double r = phi(i) + l;
    if (w(i) > thresh)
      sup = std::max(sup, std::abs(r));
    else
      slack = std::min(slack, r);
  }
  if (!std::isfinite(slack)) slack = 0.0;
  return {l, sup, slack};
}

inline BandSet extract_support(const DiscreteMeasure& m, double thresh) {
  const size_t M = m.size();
  std::vector<double> edges;
  size_t i = 0;
  while (i < M) {
    if (m.weights[i] <= thresh) {
      ++i;
      continue;
    }
    size_t start = i, last = i;
    size_t low_run = 0;
    for (size_t j = i + 1; j < M; ++j) {
      if (m.weights[j] > thresh) {
        last = j;
        low_run = 0;
      } else if (++low_run >= 3) {
        break;
      }
    }
    // a run separated by a cell-boundary jump (different bands of a fixed support) is split as well
    for (size_t j = start + 1; j <= last; ++j)
      if (m.cell_lo[j] - m.cell_hi[j - 1] > 1e-12 * std::max(1.0, std::abs(m.cell_lo[j]))) {
        edges.push_back(m.cell_lo[start]);
        edges.push_back(m.cell_hi[j - 1]);
        start = j;
      }
    edges.push_back(m.cell_lo[start]);
    edges.push_back(m.cell_hi[last]);
    i = last + 1;
  }
  if (edges.empty()) throw Error(ErrorCode::NoConvergence, "equilibrium", "extract_support", "empty support");
  return BandSet(edges);
}

inline double energy(const Eigen::VectorXd& w, const Eigen::VectorXd& Aw, const Eigen::VectorXd& f) {
  return w.dot(Aw) + f.dot(w);
}

// Minimizes w'Aw + f'w over the simplex.
inline EquilibriumResult minimize_quadratic(DiscreteMeasure m, const Eigen::MatrixXd& A, const Eigen::VectorXd& f,
                                            const SolverParams& P, const char* op) {
  const Eigen::Index M = static_cast<Eigen::Index>(m.size());
  const double thresh = 0.01 / static_cast<double>(M);
  const double target = P.target_fraction * P.tolerance;

  // Lipschitz constant of the gradient 2Aw + f by power iteration
  Eigen::VectorXd p = Eigen::VectorXd::Ones(M).normalized();
  double lam = 0;
  for (int k = 0; k < 60; ++k) {
    Eigen::VectorXd q = A * p;
    lam = q.norm();
    p = q / lam;
  }
  double L = 2.0 * lam;

  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(m.weights.data(), M);
  Eigen::VectorXd Ax = A * x;
  double Ex = energy(x, Ax, f);
  Eigen::VectorXd y = x, Ay = Ax;
  double t = 1.0;

  EquilibriumResult R;
  R.energy_history.push_back(Ex);
  int it = 0;
  int stall = 0;
  Residuals res{0, 1e300, 0};
  for (; it < P.max_iterations; ++it) {
    Eigen::VectorXd grad = 2.0 * Ay + f;
    Eigen::VectorXd z, Az;
    double Ez;
    for (;;) {  // backtracking on the step
      z = y - grad / L;
      project_simplex(z);
      Az = A * z;
      Ez = energy(z, Az, f);
      Eigen::VectorXd d = z - y;
      double Ey = energy(y, Ay, f);
      if (Ez <= Ey + grad.dot(d) + 0.5 * L * d.squaredNorm() + 1e-15 * std::abs(Ey)) break;
      L *= 2.0;
    }
    if (Ez > Ex) {
      // monotone restart from the last accepted point
      y = x;
      Ay = Ax;
      t = 1.0;
      if (++stall > 20) break;
      continue;
    }
    stall = 0;
    double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double beta = (t - 1.0) / tn;
    y = z + beta * (z - x);
    Ay = Az + beta * (Az - Ax);
    x = std::move(z);
    Ax = std::move(Az);
    Ex = Ez;
    t = tn;
    R.energy_history.push_back(Ex);
    if ((it + 1) % P.check_every == 0) {
      res = residuals_from_phi(f + 2.0 * Ax, x, thresh);
      if (res.sup_on <= target && res.min_off >= -target) {
        ++it;
        R.converged = true;
        break;
      }
    }
  }

  if (!R.converged) {
    // pairwise Frank-Wolfe: move mass from the worst active node to the best node
    R.used_fallback = true;
    for (int k = 0; it < P.max_iterations; ++k, ++it) {
      Eigen::VectorXd g = 2.0 * Ax + f;
      Eigen::Index best = 0, worst = -1;
      g.minCoeff(&best);
      double gw = -1e300;
      for (Eigen::Index i = 0; i < M; ++i)
        if (x(i) > 0 && g(i) > gw) {
          gw = g(i);
          worst = i;
        }
      if (worst < 0 || worst == best) break;
      double slope = g(best) - g(worst);
      double curv = A(best, best) + A(worst, worst) - 2.0 * A(best, worst);
      double gamma = std::min(x(worst), -slope / (2.0 * curv));
      if (!(gamma > 0)) break;
      x(best) += gamma;
      x(worst) -= gamma;
      Ax += gamma * (A.col(best) - A.col(worst));
      Ex = energy(x, Ax, f);
      R.energy_history.push_back(Ex);
      if ((k + 1) % (10 * P.check_every) == 0) {
        res = residuals_from_phi(f + 2.0 * Ax, x, thresh);
        if (res.sup_on <= target && res.min_off >= -target) {
          R.converged = true;
          ++it;
          break;
        }
      }
    }
  }

  for (Eigen::Index i = 0; i < M; ++i) m.weights[i] = std::max(0.0, x(i));
  double s = m.total_mass();
  for (auto& w : m.weights) w /= s;
  Eigen::VectorXd wn = Eigen::Map<Eigen::VectorXd>(m.weights.data(), M);
  res = residuals_from_phi(f + 2.0 * (A * wn), wn, thresh);
  R.measure = std::move(m);
  R.support = extract_support(R.measure, thresh);
  R.lagrange_constant = res.l;
  R.el_residual_sup = res.sup_on;
  R.el_min_slack = res.min_off;
  R.iterations = it;
  R.converged = res.sup_on <= P.tolerance && res.min_off >= -P.tolerance;
  if (!R.converged) throw NoConvergenceError(op, std::move(R));
  return R;
}

}  // namespace detail

// Equilibrium measure of a fixed compact set sigma (no external field).
inline EquilibriumResult minimize_fixed_support(const BandSet& sigma, int grid_size, const SolverParams& P = {}) {
  if (grid_size < 200)
    throw Error(ErrorCode::InvalidArgument, "equilibrium", "minimize_fixed_support", "grid_size must be >= 200 per band");
  DiscreteMeasure m = DiscreteMeasure::on_bands(sigma, grid_size);
  Eigen::MatrixXd A = detail::log_kernel_matrix(m, P.workers);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m.size());
  return detail::minimize_quadratic(std::move(m), A, f, P, "minimize_fixed_support");
}

// Equilibrium measure in the external field V/g on [-L, L].
inline EquilibriumResult minimize_external_field(const Potential& V, double L, int grid_size,
                                                 const SolverParams& P = {}) {
  if (grid_size < 1000)
    throw Error(ErrorCode::InvalidArgument, "equilibrium", "minimize_external_field", "grid_size must be >= 1000");
  if (!(L > 0))
    throw Error(ErrorCode::InvalidArgument, "equilibrium", "minimize_external_field", "L must be positive");
  DiscreteMeasure m = DiscreteMeasure::uniform_grid(-L, L, grid_size);
  Eigen::MatrixXd A = detail::log_kernel_matrix(m, P.workers);
  Eigen::VectorXd f = detail::field_vector(m, V);
  EquilibriumResult R = detail::minimize_quadratic(std::move(m), A, f, P, "minimize_external_field");
  double edge_mass = 0;
  for (int i = 0; i < 5; ++i) edge_mass += R.measure.weights[i] + R.measure.weights[grid_size - 1 - i];
  if (edge_mass > 1e-6)
    throw Error(ErrorCode::DomainTooSmall, "equilibrium", "minimize_external_field",
                "weight near +-L is " + std::to_string(edge_mass));
  return R;
}

struct ElResidual {
  double sup_on_support;
  double min_slack_off_support;
  double lagrange_constant;
};

namespace detail {
inline ElResidual el_residual_impl(const DiscreteMeasure& m, const Eigen::VectorXd& f, int workers) {
  const size_t M = m.size();
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(m.weights.data(), M);
  Eigen::VectorXd phi(M);
  if (uniform_cells(m)) {
    phi = f + 2.0 * (log_kernel_matrix(m, workers) * w);
    Residuals r = residuals_from_phi(phi, w, 0.01 / static_cast<double>(M));
    return {r.sup_on, r.min_off, r.l};
  }
  parallel_for(M, workers, [&](size_t i) {
    double s = 0;
    for (size_t j = 0; j < M; ++j)
      if (m.weights[j] != 0.0) s += cell_log_average(m.cell_lo[i], m.cell_hi[i], m.cell_lo[j], m.cell_hi[j]) * m.weights[j];
    phi(i) = f(i) + 2.0 * s;
  });
  Residuals r = residuals_from_phi(phi, w, 0.01 / static_cast<double>(M));
  return {r.sup_on, r.min_off, r.l};
}
}  // namespace detail

// Euler-Lagrange residuals of a measure in the external field V/g.
inline ElResidual el_residual(const DiscreteMeasure& m, const Potential& V, int workers = 1) {
  return detail::el_residual_impl(m, detail::field_vector(m, V), workers);
}

// Euler-Lagrange residuals for the fixed-support problem.
inline ElResidual el_residual(const DiscreteMeasure& m, const BandSet&, int workers = 1) {
  return detail::el_residual_impl(m, Eigen::VectorXd::Zero(m.size()), workers);
}

// Discretizes an absolutely continuous measure: each cell receives its exact mass.
inline DiscreteMeasure discretize(const BandMeasure& mu, double a, double b, int cells) {
  DiscreteMeasure m = DiscreteMeasure::uniform_grid(a, b, cells);
  std::vector<double> tails(m.size() + 1);
  for (size_t i = 0; i < m.size(); ++i) tails[i] = mu.tail(m.cell_lo[i]);
  tails[m.size()] = mu.tail(m.cell_hi.back());
  for (size_t i = 0; i < m.size(); ++i) m.weights[i] = std::max(0.0, tails[i] - tails[i + 1]);
  double s = m.total_mass();
  for (auto& w : m.weights) w /= s;
  return m;
}

struct FrequencyVector {
  std::vector<double> values;
  void validate() const {
    for (size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0 && values[i] < 1))
        throw Error(ErrorCode::InvalidArgument, "equilibrium", "FrequencyVector", "component outside (0,1)");
      if (i > 0 && !(values[i] < values[i - 1]))
        throw Error(ErrorCode::InvalidArgument, "equilibrium", "FrequencyVector", "not strictly decreasing");
    }
  }
};

// Mass above the lower edge of each band after the first. One band gives an empty vector.
inline FrequencyVector frequencies(const EquilibriumResult& r) {
  FrequencyVector fv;
  const auto& s = r.support;
  for (size_t l = 0; l + 1 < s.q(); ++l) {
    double a = s.a(l + 1), mass = 0;
    for (size_t i = 0; i < r.measure.size(); ++i)
      if (r.measure.nodes[i] > a) mass += r.measure.weights[i];
    fv.values.push_back(mass);
  }
  fv.validate();
  return fv;
}

// (1/g) int_0^g nu_{g'}((x, inf)) dg' compared with N_g((x, inf)) over a grid
// covering sigma_g. Below g* = min(v(x)^2/4, g) the point x is off sigma_{g'} and
// the tail of nu_{g'} is a constant; above g* the integrand has a square-root
// endpoint, removed by g' = g* + (g - g*) s^2.
inline double check_nnu(const Potential& V, double g, int order, int samples = 401) {
  V.require_square("check_nnu");
  if (order < 2) throw Error(ErrorCode::InvalidArgument, "equilibrium", "check_nnu", "order must be >= 2");
  Potential Pg = V.with_amplitude(g);
  BandSet bs = bands_from_polynomial(Pg);
  NodesWeights gl = gauss_legendre(order);
  // for g' < g* every band of sigma_{g'} holds exactly one root of v
  std::vector<double> roots = real_roots(V.v(), 1e-12);
  double pad = 0.05 * (bs.upper() - bs.lower());
  double sup = 0;
  for (int k = 0; k < samples; ++k) {
    double x = bs.lower() - pad + (bs.upper() - bs.lower() + 2 * pad) * k / (samples - 1.0);
    double vx = V.v()(x);
    double gs = std::min(0.25 * vx * vx, g);
    double acc = 0;
    if (gs > 0) {
      double above = static_cast<double>(std::count_if(roots.begin(), roots.end(), [&](double r) { return r > x; }));
      acc += gs * above / V.q();
    }
    if (g > gs) {
      double s = 0;
      for (int i = 0; i < order; ++i) {
        double u = 0.5 * (gl.x[i] + 1.0);
        double gp = gs + (g - gs) * u * u;
        s += gl.w[i] * 0.5 * 2.0 * u * counting_functions_any(V.with_amplitude(gp), x).nu;
      }
      acc += (g - gs) * s;
    }
    double lhs = counting_functions_any(Pg, x).N;
    sup = std::max(sup, std::abs(lhs - acc / g));
  }
  return sup;
}

// Logarithmic potential int log|x - mu| m(dmu) of a piecewise-constant measure.
inline double log_potential(const DiscreteMeasure& m, double x) {
  auto F = [](double t) { return t == 0.0 ? 0.0 : t * std::log(std::abs(t)) - t; };
  double acc = 0;
  for (size_t i = 0; i < m.size(); ++i) {
    if (m.weights[i] == 0.0) continue;
    acc += m.weights[i] * (F(m.cell_hi[i] - x) - F(m.cell_lo[i] - x)) / m.width(i);
  }
  return acc;
}

inline double thouless_check(const JacobiOperator& op, const DiscreteMeasure& nu, const std::vector<double>& samples) {
  return thouless_check(op, [&](double x) { return log_potential(nu, x); }, samples);
}

// sup over samples of |V(x) - 2 int_0^g gamma_{g'}(x) dg'|. The integrand vanishes once
// x enters sigma_{g'}, i.e. for g' >= v(x)^2 / 4.
inline double lyapunov_potential_identity(const Potential& V, double g, const std::vector<double>& samples) {
  V.require_square("lyapunov_potential_identity");
  Potential Pg = V.with_amplitude(g);
  BandSet bs = bands_from_polynomial(Pg);
  const int q = static_cast<int>(V.q());
  double sup = 0;
  for (double x : samples) {
    if (!bs.contains(detail::snap_to_edge(bs.edges(), x)))
      throw Error(ErrorCode::OutsideSpectrum, "equilibrium", "lyapunov_potential_identity", "sample outside sigma_g");
    double vx = V.v()(x);
    double gs = std::min(0.25 * vx * vx, g);
    double integral = 0;
    if (gs > 0) {
      auto gamma = [&](double gp, double, double) {
        if (!(gp > 0)) return 0.0;
        if (q <= 2) {
          try {
            return lyapunov_exponent(periodic_from_square(V.with_amplitude(gp)), x);
          } catch (const Error&) {
          }
        }
        return lyapunov_from_discriminant(V.v() * (1.0 / (2.0 * std::sqrt(gp))), q, x);
      };
      integral = tanh_sinh(gamma, 0.0, gs, 1e-12);
    }
    sup = std::max(sup, std::abs(V(x) - 2.0 * integral));
  }
  return sup;
}

}  // namespace specband
