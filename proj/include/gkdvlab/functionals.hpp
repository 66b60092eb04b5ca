#pragma once

// Diagnostic functionals on fields and time series: mass gap, virial
// quantities, the Morawetz potential and its derivative identity, tail
// masses with decay-bound ratios, mixed spacetime norms and the scattering
// size, the scaling-translation group action, and the profile
// orthogonality gauge.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkdvlab/evolve.hpp"
#include "gkdvlab/grid.hpp"
#include "gkdvlab/soliton.hpp"

namespace gkdvlab {

// ---------------------------------------------------------------------------
// Cutoff weights, selected by name.

/// Smooth even cutoff: 1 on |x| <= 1, exp(1 - 1/(1-(|x|-1)^2)) on
/// 1 < |x| < 2, and 0 beyond.
inline double bump_cutoff(double x) {
  const double s = std::abs(x) - 1;
  if (s <= 0) return 1.0;
  if (s >= 1) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

/// Second derivative of bump_cutoff, piecewise analytic (zero on the
/// plateau and outside the support).
inline double bump_cutoff_d2(double x) {
  const double s = std::abs(x) - 1;
  if (s <= 0 || s >= 1) return 0.0;
  const double m = 1.0 - s * s;
  const double g1 = -2.0 * s / (m * m);
  const double g2 = -2.0 / (m * m) - 8.0 * s * s / (m * m * m);
  return (g2 + g1 * g1) * std::exp(1.0 - 1.0 / m);
}

/// Named monitor weights on the grid.  "bump" is bump_cutoff(x/scale);
/// "soliton" is c Q(x/scale) with c chosen so the weight has unit integral.
inline Field cutoff_weight(const Grid& grid, const std::string& name,
                           double scale) {
  if (!(scale > 0)) throw std::invalid_argument("weight scale must be positive");
  if (name == "bump")
    return sample(grid, [&](double x) { return bump_cutoff(x / scale); });
  if (name == "soliton") {
    Field w = sample(grid, [&](double x) { return q_eval(x / scale); });
    const double total = integral(w);
    w.v /= total;
    return w;
  }
  throw std::invalid_argument("unknown weight name \"" + name +
                              "\" (valid: bump, soliton)");
}

// ---------------------------------------------------------------------------
// Scaling-translation group.

struct GroupElement {
  double x0 = 0;
  double lambda = 1;
};

inline GroupElement group_identity() { return {0.0, 1.0}; }

inline GroupElement group_compose(const GroupElement& g,
                                  const GroupElement& h) {
  return {g.x0 + g.lambda * h.x0, g.lambda * h.lambda};
}

inline GroupElement group_inverse(const GroupElement& g) {
  return {-g.x0 / g.lambda, 1.0 / g.lambda};
}

/// (T_g f)(x) = lambda^{-1/2} f(lambda^{-1}(x - x0)).  Evaluation points
/// that leave the principal box read zero instead of wrapping, so a
/// compression (lambda < 1) stays unitary for decaying fields instead of
/// planting periodic images at the box edge.
inline Field group_apply(const GroupElement& g, const Field& f) {
  if (!(g.lambda > 0) || !std::isfinite(g.lambda))
    throw std::invalid_argument("frame scale must be positive and finite");
  const Grid& grid = f.grid;
  if (g.lambda < 8 * grid.spacing())
    throw std::invalid_argument("under-resolved frame");
  const double start = (-grid.L / 2 - g.x0) / g.lambda;
  const double step = grid.spacing() / g.lambda;
  const Vec samples = trig_interp_uniform(f, start, step, grid.N);
  Vec v(grid.N);
  const double amp = 1.0 / std::sqrt(g.lambda);
  for (int i = 0; i < grid.N; ++i) {
    const double arg = start + i * step;
    v[i] = (arg >= -grid.L / 2 && arg < grid.L / 2) ? amp * samples[i] : 0.0;
  }
  return Field{grid, v};
}

/// Spacetime action: times rescale by lambda^3, snapshots by group_apply.
inline TimeSeries spacetime_action(const GroupElement& g,
                                   const TimeSeries& series) {
  TimeSeries out;
  out.grid = series.grid;
  out.config = series.config;
  const double l3 = g.lambda * g.lambda * g.lambda;
  out.config.dt = series.config.dt * l3;
  out.config.T = series.config.T * l3;
  for (double t : series.times) out.times.push_back(l3 * t);
  for (const Field& u : series.snapshots)
    out.snapshots.push_back(group_apply(g, u));
  out.mass_drift = series.mass_drift;
  out.energy_drift = series.energy_drift;
  if (series.blow_up) {
    out.blow_up = series.blow_up;
    out.blow_up->t *= l3;
    out.blow_up->sup /= std::sqrt(g.lambda);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mass bookkeeping.

/// Half the mass deficit to the ground state: (||Q||^2 - ||u0||^2) / 2.
inline double mass_gap(const Field& u0) {
  return 0.5 * (mass(q_profile(u0.grid)) - mass(u0));
}

/// |<eps, Q> + massGap + ||eps||^2 / 2| — zero along a mass-conserving
/// flow decomposed with unitary rescaling.
inline double mass_identity_residual(const Field& eps, double massGap) {
  const Field q = q_profile(eps.grid);
  const double m = mass(eps);
  return std::abs(inner_product(eps, q) + massGap + 0.5 * m);
}

// ---------------------------------------------------------------------------
// Virial functionals.

namespace detail {

inline void require_edge_decay(const Field& eps) {
  if (std::abs(eps.v[0]) >= 1e-8 ||
      std::abs(eps.v[eps.grid.N - 1]) >= 1e-8)
    throw std::invalid_argument("remainder does not decay at the box edge");
}

}  // namespace detail

/// J(eps, lambda) = lambda^{1/2} (<eps, P> - kappa) where P is the
/// left-anchored antiderivative of LamQ and kappa = (int Q)^2 / 4.
inline double virial_J(const Field& eps, double lambda) {
  detail::require_edge_decay(eps);
  const Grid& g = eps.grid;
  const Field lamq = sample(g, [](double y) { return lambda_q_eval(y); });
  const Field P = cumulative_integral(lamq);
  const double intQ = integral(q_profile(g));
  const double kappa = 0.25 * intQ * intQ;
  return std::sqrt(lambda) * (inner_product(eps, P) - kappa);
}

/// M(eps, lambda) = lambda/2 * int y eps(y)^2 dy.
inline double virial_M(const Field& eps, double lambda) {
  detail::require_edge_decay(eps);
  const Grid& g = eps.grid;
  double acc = 0;
  for (int i = 0; i < g.N; ++i)
    acc += g.node(i) * eps.v[i] * eps.v[i];
  return 0.5 * lambda * acc * g.L / g.N;
}

// ---------------------------------------------------------------------------
// Morawetz potential and its derivative identity.

namespace detail {

inline void require_morawetz_radius(const Grid& g, double R) {
  if (!(R > 0)) throw std::invalid_argument("R must be positive");
  if (R > g.L / 4)
    throw std::invalid_argument(
        "R must not exceed a quarter of the box length");
}

}  // namespace detail

/// int Psi(x) u^2 dx with Psi the antiderivative, anchored at the left box
/// edge, of the bump cutoff scaled to [center - 2R, center + 2R].
inline double morawetz_potential(const Field& u, double R, double center) {
  detail::require_morawetz_radius(u.grid, R);
  const Field phi = sample(
      u.grid, [&](double x) { return bump_cutoff((x - center) / R); });
  const Field psi = cumulative_integral(phi);
  double acc = 0;
  for (int i = 0; i < u.grid.N; ++i) acc += psi.v[i] * u.v[i] * u.v[i];
  return acc * u.grid.L / u.grid.N;
}

/// The flow derivative of the Morawetz potential evaluated directly:
/// -3 int phi u_x^2 + R^-2 int phi'' u^2 + (5/3) int phi u^6.
inline double morawetz_rhs(const Field& u, double R, double center) {
  detail::require_morawetz_radius(u.grid, R);
  const Grid& g = u.grid;
  const Field ux = derivative(u, 1);
  const Field u3 = pow_dealiased(u, 3);
  double acc = 0;
  for (int i = 0; i < g.N; ++i) {
    const double xi = (g.node(i) - center) / R;
    const double u2 = u.v[i] * u.v[i];
    acc += -3.0 * bump_cutoff(xi) * ux.v[i] * ux.v[i] +
           bump_cutoff_d2(xi) / (R * R) * u2 +
           (5.0 / 3.0) * bump_cutoff(xi) * u3.v[i] * u3.v[i];
  }
  return acc * g.L / g.N;
}

/// Max over interior snapshots of |centered-difference dM/dt - rhs|.
inline double morawetz_derivative_check(const TimeSeries& series, double R,
                                        double center) {
  if (series.snapshots.size() < 3)
    throw std::invalid_argument("need at least three snapshots");
  double worst = 0;
  for (size_t i = 1; i + 1 < series.snapshots.size(); ++i) {
    const double m0 = morawetz_potential(series.snapshots[i - 1], R, center);
    const double m1 = morawetz_potential(series.snapshots[i + 1], R, center);
    const double fd = (m1 - m0) / (series.times[i + 1] - series.times[i - 1]);
    const double rhs = morawetz_rhs(series.snapshots[i], R, center);
    worst = std::max(worst, std::abs(fd - rhs));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Tail masses.

enum class Side { Left, Right };

/// int u^2 over {x <= x(t) - x0} (Left) or {x >= x(t) + x0} (Right), by
/// trapezoid quadrature with a linearly interpolated fractional end cell.
inline double tail_mass(const Field& u, const Frame& frame, double x0,
                        Side side) {
  if (!(x0 >= 0)) throw std::invalid_argument("offset must be nonnegative");
  const Grid& g = u.grid;
  const double edge =
      side == Side::Left ? frame.x0 - x0 : frame.x0 + x0;
  if (edge < -g.L / 2 || edge > g.L / 2 - g.spacing())
    throw std::invalid_argument("window outside the box");
  const double h = g.spacing();
  auto sq = [&](int i) { return u.v[i] * u.v[i]; };
  if (side == Side::Left) {
    // Nodes fully inside (-L/2, edge], then the partial cell up to edge.
    const int j = static_cast<int>(std::floor((edge + g.L / 2) / h));
    double acc = 0;
    for (int i = 0; i < j; ++i) acc += 0.5 * (sq(i) + sq(i + 1)) * h;
    const double frac = edge - g.node(j);
    if (frac > 0 && j + 1 < g.N) {
      const double fe = sq(j) + (sq(j + 1) - sq(j)) * (frac / h);
      acc += 0.5 * (sq(j) + fe) * frac;
    }
    return acc;
  }
  const int j = static_cast<int>(std::ceil((edge + g.L / 2) / h));
  double acc = 0;
  for (int i = j; i + 1 < g.N; ++i) acc += 0.5 * (sq(i) + sq(i + 1)) * h;
  const double frac = g.node(j) - edge;
  if (frac > 0 && j > 0) {
    const double fe = sq(j) + (sq(j - 1) - sq(j)) * (frac / h);
    acc += 0.5 * (sq(j) + fe) * frac;
  }
  return acc;
}

/// tail_mass divided by the reference envelope e^{-x0/6}.
inline double decay_bound_ratio(const Field& u, const Frame& frame, double x0,
                                Side side) {
  return tail_mass(u, frame, x0, side) / std::exp(-x0 / 6.0);
}

// ---------------------------------------------------------------------------
// Mixed spacetime norms and the scattering size.

namespace detail {

/// Composite Simpson over uniformly spaced samples; an odd interval count
/// ends with a 3/8 block.  One interval degrades to the trapezoid.
inline double simpson(const std::vector<double>& f, double h) {
  const int m = static_cast<int>(f.size()) - 1;
  if (m <= 0) return 0.0;
  if (m == 1) return 0.5 * h * (f[0] + f[1]);
  const int even = (m % 2 == 0) ? m : m - 3;
  double acc = 0;
  if (even > 0) {
    acc += f[0] + f[even];
    for (int i = 1; i < even; i += 2) acc += 4 * f[i];
    for (int i = 2; i < even; i += 2) acc += 2 * f[i];
    acc *= h / 3.0;
  }
  if (even < m)
    acc += 3.0 * h / 8.0 *
           (f[m - 3] + 3 * f[m - 2] + 3 * f[m - 1] + f[m]);
  return acc;
}

}  // namespace detail

/// ( int_box [ int_I |u(t,x)|^q dt ]^{p/q} dx )^{1/p}: composite Simpson in
/// t over the snapshots, grid quadrature in x.
inline double mixed_norm(const TimeSeries& series, double t0, double t1,
                         double p, double q) {
  if (!(p >= 1) || !(q >= 1))
    throw std::invalid_argument("p and q must be at least 1");
  if (!(t1 > t0)) throw std::invalid_argument("empty time interval");
  if (series.times.empty() || t0 < series.times.front() - 1e-9 ||
      t1 > series.times.back() + 1e-9)
    throw std::invalid_argument("interval outside the series span");

  size_t first = 0;
  while (first < series.times.size() && series.times[first] < t0 - 1e-9)
    ++first;
  size_t last = series.times.size() - 1;
  while (last > 0 && series.times[last] > t1 + 1e-9) --last;
  if (last <= first || std::abs(series.times[first] - t0) > 1e-9 ||
      std::abs(series.times[last] - t1) > 1e-9)
    throw std::invalid_argument(
        "interval endpoints must align with snapshot times");

  const double dt = series.times[first + 1] - series.times[first];
  for (size_t i = first; i < last; ++i) {
    const double step = series.times[i + 1] - series.times[i];
    if (std::abs(step - dt) > 1e-9)
      throw std::invalid_argument("snapshots must be uniformly spaced");
    if (step > 1.0 / 16.0 + 1e-12)
      throw std::invalid_argument("too-sparse snapshots");
  }

  const Grid& g = series.grid;
  const size_t count = last - first + 1;
  std::vector<double> column(count);
  double acc = 0;
  for (int i = 0; i < g.N; ++i) {
    for (size_t j = 0; j < count; ++j)
      column[j] = std::pow(std::abs(series.snapshots[first + j].v[i]), q);
    const double inner = std::pow(detail::simpson(column, dt), 1.0 / q);
    acc += std::pow(inner, p);
  }
  return std::pow(acc * g.L / g.N, 1.0 / p);
}

/// S_I(u) = ||u||^5 with the L^5_x L^10_t mixed norm over I = [t0, t1].
inline double scattering_size(const TimeSeries& series, double t0,
                              double t1) {
  return std::pow(mixed_norm(series, t0, t1, 5.0, 10.0), 5.0);
}

// ---------------------------------------------------------------------------
// Profile orthogonality gauge.

struct ProfileParams {
  double lambda = 1;
  double xi = 0;
  double x = 0;
  double t = 0;
};

struct OrthogonalityGauge {
  double scale_ratio_12 = 0;  // lambda1 / lambda2
  double scale_ratio_21 = 0;  // lambda2 / lambda1
  double xi_separation = 0;
  double time_separation = 0;
  double space_separation = 0;
  double total = 0;
};

/// The five-summand divergence gauge between two profile parameter tuples;
/// two tuples decouple asymptotically exactly when the total diverges.
/// Scales must be positive.
inline OrthogonalityGauge asym_orthogonality_gauge(const ProfileParams& a,
                                                   const ProfileParams& b) {
  OrthogonalityGauge out;
  out.scale_ratio_12 = a.lambda / b.lambda;
  out.scale_ratio_21 = b.lambda / a.lambda;
  out.xi_separation = std::sqrt(a.lambda * b.lambda) * std::abs(a.xi - b.xi);
  const double tdiff = a.lambda * a.lambda * a.lambda * a.t -
                       b.lambda * b.lambda * b.lambda * b.t;
  const double prod = a.lambda * a.xi * b.lambda * b.xi;
  out.time_separation = std::pow(1.0 + prod * prod, 0.25) *
                        std::abs(tdiff) /
                        std::pow(a.lambda * b.lambda, 1.5);
  out.space_separation =
      std::abs(a.x - b.x + 1.5 * tdiff * (a.xi * a.xi + b.xi * b.xi)) /
      std::sqrt(a.lambda * b.lambda);
  out.total = out.scale_ratio_12 + out.scale_ratio_21 + out.xi_separation +
              out.time_separation + out.space_separation;
  return out;
}

}  // namespace gkdvlab
