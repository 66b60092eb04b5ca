#pragma once

// Modulation decomposition around the soliton family: renormalized
// remainders, the orthogonality constraints that fix the frame, the damped
// Newton solver for the frame parameters, the 2x2 linear system for the
// modulation rates (a, b) = (lambda_s/lambda, x_s/lambda - 1), and the
// continuation tracker that follows a frame through a time series.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "gkdvlab/evolve.hpp"
#include "gkdvlab/grid.hpp"
#include "gkdvlab/linearized.hpp"
#include "gkdvlab/soliton.hpp"

namespace gkdvlab {

/// eps(y) = lambda^{1/2} u(lambda y + x0) - Q(y), sampled on the same
/// (L, N) grid that carries u.  The sample points lambda*y_i + x0 fall off
/// the grid, so u is evaluated by trigonometric interpolation.
inline Field renormalized_remainder(const Field& u, const Frame& frame) {
  require_resolvable(u.grid, frame);
  const Grid& g = u.grid;
  const double start = frame.x0 - frame.lambda * (g.L / 2);
  const Vec samples =
      trig_interp_uniform(u, start, frame.lambda * g.spacing(), g.N);
  const double amp = std::sqrt(frame.lambda);
  Vec v(g.N);
  for (int i = 0; i < g.N; ++i) v[i] = amp * samples[i] - q_eval(g.node(i));
  return Field{g, std::move(v)};
}

/// The two constraint functionals rho1 = <eps, y Q_y>, rho2 = <eps, y LamQ>
/// evaluated at the given frame.  Both vanish at a well-chosen frame.
inline std::pair<double, double> orthogonality_residuals(const Field& u,
                                                         const Frame& frame) {
  const Field eps = renormalized_remainder(u, frame);
  const Grid& g = u.grid;
  double r1 = 0, r2 = 0;
  for (int i = 0; i < g.N; ++i) {
    const double y = g.node(i);
    r1 += eps.v[i] * y * q_deriv(y);
    r2 += eps.v[i] * y * lambda_q_eval(y);
  }
  const double w = g.L / g.N;
  return {w * r1, w * r2};
}

struct Decomposition {
  Frame frame;
  Field eps;
  double rho1 = 0;
  double rho2 = 0;
  int iterations = 0;
  bool converged = false;
};

/// Peak-reading initial frame: x0 at the largest |u| node, lambda from the
/// peak height via max|u| = Q(0)/sqrt(lambda), clamped to the resolvable
/// range of the grid.
inline Frame auto_frame_guess(const Field& u) {
  Eigen::Index idx = 0;
  const double peak = u.v.abs().maxCoeff(&idx);
  if (!(peak > 0) || !std::isfinite(peak))
    throw std::invalid_argument("cannot guess a frame for a vanishing field");
  const double ratio = q_eval(0) / peak;
  double lambda = ratio * ratio;
  const double lo = 8 * u.grid.spacing() * 1.0001;
  const double hi = u.grid.L / 8;
  lambda = std::min(std::max(lambda, lo), hi);
  return Frame{lambda, u.grid.node(static_cast<int>(idx))};
}

/// Solves rho1(lambda, x0) = rho2(lambda, x0) = 0 by a damped Newton
/// iteration with the analytic Jacobian.  Writing w = Q + eps, the entries
/// are inner products of w against fixed profiles built from Q and its
/// derivatives (differentiating eps with respect to the frame moves the
/// derivative onto the constraint profile).  Candidates that leave the
/// resolvable region are rejected during damping; an undamped step that
/// drives lambda nonpositive with no acceptable fallback is divergence.
inline Decomposition decompose(const Field& u, const Frame& guess,
                               double tol = 1e-12, int maxIter = 50) {
  const Grid& g = u.grid;
  const int n = g.N;
  const double w = g.L / n;

  Vec qv(n), yqy(n), ylamq(n), j1l(n), j1x(n), j2l(n), j2x(n);
  for (int i = 0; i < n; ++i) {
    const double y = g.node(i);
    const double q = q_eval(y), qy = q_deriv(y), qyy = q_deriv2(y);
    qv[i] = q;
    yqy[i] = y * qy;
    ylamq[i] = y * lambda_q_eval(y);
    j1l[i] = 1.5 * y * qy + y * y * qyy;
    j1x[i] = qy + y * qyy;
    j2l[i] = 0.75 * y * q + 3 * y * y * qy + y * y * y * qyy;
    j2x[i] = 0.5 * q + 2.5 * y * qy + y * y * qyy;
  }

  Frame cur = guess;
  Field eps = renormalized_remainder(u, cur);
  double rho1 = w * (eps.v * yqy).sum();
  double rho2 = w * (eps.v * ylamq).sum();

  Decomposition out{cur, eps, rho1, rho2, 0, false};
  for (int iter = 0; iter < maxIter; ++iter) {
    if (std::abs(rho1) + std::abs(rho2) <= tol) {
      out.converged = true;
      break;
    }
    const Vec wv = qv + eps.v;
    const double inv = -1.0 / cur.lambda;
    const double J11 = inv * w * (wv * j1l).sum();
    const double J12 = inv * w * (wv * j1x).sum();
    const double J21 = inv * w * (wv * j2l).sum();
    const double J22 = inv * w * (wv * j2x).sum();
    const double det = J11 * J22 - J12 * J21;
    if (!(std::abs(det) > 1e-300)) break;
    const double dl = (-rho1 * J22 + rho2 * J12) / det;
    const double dx = (-rho2 * J11 + rho1 * J21) / det;

    const double base = std::abs(rho1) + std::abs(rho2);
    bool accepted = false;
    double alpha = 1.0;
    for (int halving = 0; halving <= 8; ++halving, alpha *= 0.5) {
      Frame cand{cur.lambda + alpha * dl,
                 std::remainder(cur.x0 + alpha * dx, g.L)};
      if (!(cand.lambda >= 8 * g.spacing()) || !std::isfinite(cand.lambda) ||
          !std::isfinite(cand.x0))
        continue;
      Field ceps = renormalized_remainder(u, cand);
      const double c1 = w * (ceps.v * yqy).sum();
      const double c2 = w * (ceps.v * ylamq).sum();
      if (std::abs(c1) + std::abs(c2) < base) {
        cur = cand;
        eps = std::move(ceps);
        rho1 = c1;
        rho2 = c2;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (cur.lambda + dl <= 0)
        throw std::runtime_error("scale iterate became non-positive");
      break;
    }
    out.iterations = iter + 1;
    out.frame = cur;
    out.eps = eps;
    out.rho1 = rho1;
    out.rho2 = rho2;
  }
  if (std::abs(rho1) + std::abs(rho2) <= tol) out.converged = true;
  out.frame = cur;
  out.eps = std::move(eps);
  out.rho1 = rho1;
  out.rho2 = rho2;
  return out;
}

struct ModulationRates {
  double a = 0;          // lambda_s / lambda
  double b = 0;          // x_s / lambda - 1
  double condition = 0;  // condition number of the 2x2 rate system
};

/// Differentiating the two constraints along the flow of the eps equation
/// gives a 2x2 linear system M (a, b)^T = r.  Each column collects the
/// pairing of the generator (scaling for a, translation for b) acting on
/// Q + eps against the constraint profiles; the right side pairs eps and
/// the nonlinear remainder against L f with f the derivative of each
/// profile.  Solved by SVD so near-degeneracy is detected, not amplified.
inline ModulationRates modulation_rates(const Field& eps) {
  const Grid& g = eps.grid;
  const int n = g.N;
  const double w = g.L / n;

  Vec qv(n), yv(n), qyv(n), qyyv(n), lamqv(n);
  for (int i = 0; i < n; ++i) {
    const double y = g.node(i);
    yv[i] = y;
    qv[i] = q_eval(y);
    qyv[i] = q_deriv(y);
    qyyv[i] = q_deriv2(y);
    lamqv[i] = lambda_q_eval(y);
  }
  const Vec yqy = yv * qyv;
  const Vec ylamq = yv * lamqv;
  const Vec f1 = qyv + yv * qyyv;                             // (y Q_y)_y
  const Vec f2 = 0.5 * qv + 2.5 * yv * qyv + yv * yv * qyyv;  // (y LamQ)_y
  const Vec p11 = 2 * yv * qyv + yv * yv * qyyv;
  const Vec p21 = yv * qv + 3.5 * yv * yv * qyv + yv * yv * yv * qyyv;

  const double S = w * (lamqv * lamqv).sum();
  const auto dot = [&](const Vec& av, const Vec& bv) {
    return w * (av * bv).sum();
  };

  Eigen::Matrix2d M;
  M(0, 0) = S + 0.5 * dot(eps.v, yqy) - dot(eps.v, p11);
  M(0, 1) = -dot(eps.v, f1);
  M(1, 0) = 0.5 * dot(eps.v, ylamq) - dot(eps.v, p21);
  M(1, 1) = S - dot(eps.v, f2);

  const Field Lf1 = apply_L(Field{g, f1});
  const Field Lf2 = apply_L(Field{g, f2});
  const Field rem = nonlinear_remainder(eps);
  Eigen::Vector2d r;
  r(0) = dot(eps.v, Lf1.v) - dot(rem.v, f1);
  r(1) = dot(eps.v, Lf2.v) - dot(rem.v, f2);

  Eigen::JacobiSVD<Eigen::Matrix2d> svd(
      M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(1);
  // The floor is relative to both the matrix and the unperturbed system
  // size S, so an all-but-vanishing matrix is also reported as singular.
  if (!(smin > 1e-12 * std::max(smax, S)))
    throw std::runtime_error(
        "modulation rate system is singular: smallest singular value " +
        detail::format17(smin));
  const Eigen::Vector2d ab = svd.solve(r);
  return ModulationRates{ab(0), ab(1), smax / smin};
}

/// L2 norm of the eps-equation defect
///   eps_s - [ (L eps)_y + a LamQ + b Q_y + a (eps/2 + y eps_y)
///             + b eps_y - (R(eps))_y ].
inline double epsilon_equation_residual(const Field& eps, const Field& eps_s,
                                        const ModulationRates& rates) {
  require_same_grid(eps, eps_s);
  const Grid& g = eps.grid;
  Vec lamqv(g.N), qyv(g.N), yv(g.N);
  for (int i = 0; i < g.N; ++i) {
    const double y = g.node(i);
    yv[i] = y;
    lamqv[i] = lambda_q_eval(y);
    qyv[i] = q_deriv(y);
  }
  const Field eps_y = derivative(eps, 1);
  const Vec rhs = derivative(apply_L(eps), 1).v + rates.a * lamqv +
                  rates.b * qyv +
                  rates.a * (0.5 * eps.v + yv * eps_y.v) + rates.b * eps_y.v -
                  derivative(nonlinear_remainder(eps), 1).v;
  return l2_norm(Field{g, eps_s.v - rhs});
}

/// Accumulates s(t) = int_0^t lambda(tau)^{-3} dtau by the trapezoid rule
/// over the given samples.  s starts at 0 at the first sample.
inline std::vector<double> rescaled_time(const std::vector<double>& times,
                                         const std::vector<double>& scales) {
  if (times.size() != scales.size())
    throw std::invalid_argument("times and scales must have equal length");
  std::vector<double> s(times.size(), 0.0);
  if (times.empty()) return s;
  for (double lam : scales)
    if (!(lam > 0) || !std::isfinite(lam))
      throw std::invalid_argument("non-positive scale sample");
  for (size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    if (!(dt > 0))
      throw std::invalid_argument("times must be strictly increasing");
    const double li = 1.0 / (scales[i] * scales[i] * scales[i]);
    const double lp =
        1.0 / (scales[i - 1] * scales[i - 1] * scales[i - 1]);
    s[i] = s[i - 1] + dt * 0.5 * (li + lp);
  }
  return s;
}

struct TrackRecord {
  double t = 0;
  double s = 0;
  double lambda = 1;
  double x = 0;
  double eps_l2 = 0;
  double eps_h1 = 0;
  double rho1 = 0;
  double rho2 = 0;
  double rate_a = 0;
  double rate_b = 0;
  bool departed = false;
};

struct ModulationTrack {
  std::vector<TrackRecord> records;
  double delta = 0.1;
  // Largest observed (|a| + |b|) / (||eps||_2 + ||eps||_2 ||eps||_8^4)
  // over the non-departed rows; 0 when no row contributed.
  double envelope_c = 0;
};

namespace detail {

/// Coarse global search for the frame minimizing ||u - soliton(frame)||_2,
/// used to double-check an apparent departure before declaring it.
inline Frame global_frame_scan(const Field& u) {
  const Grid& g = u.grid;
  const double lo = 8 * g.spacing() * 1.05;
  const double hi = g.L / 8;
  Frame best{1.0, 0.0};
  double bestMisfit = std::numeric_limits<double>::infinity();
  for (int il = 0; il < 16; ++il) {
    const double lambda = lo * std::pow(hi / lo, il / 15.0);
    for (int ix = 0; ix < 24; ++ix) {
      const Frame cand{lambda, -g.L / 2 + (ix + 0.5) * g.L / 24};
      const Field sol = soliton_on_grid(g, cand);
      const double misfit = l2_norm(Field{g, u.v - sol.v});
      if (misfit < bestMisfit) {
        bestMisfit = misfit;
        best = cand;
      }
    }
  }
  return best;
}

inline std::optional<Decomposition> try_decompose(const Field& u,
                                                  const Frame& guess) {
  try {
    return decompose(u, guess);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Follows the modulation frame through a time series by continuation: each
/// snapshot is decomposed starting from the previous frame.  A snapshot
/// whose remainder exceeds delta in L2, or where Newton fails, is re-checked
/// from a coarse global frame scan before the track is declared departed;
/// the departure row is recorded (with the best data available) and the
/// track stops there.  Never throws.
inline ModulationTrack track(const TimeSeries& series, double delta = 0.1) {
  ModulationTrack out;
  out.delta = delta;
  if (series.snapshots.empty()) return out;

  Frame guess;
  try {
    guess = auto_frame_guess(series.snapshots.front());
  } catch (const std::exception&) {
    guess = Frame{1.0, 0.0};
  }

  double s = 0;
  double prevT = 0, prevInv3 = 0;
  bool havePrev = false;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (size_t i = 0; i < series.snapshots.size(); ++i) {
    const Field& u = series.snapshots[i];
    const double t = series.times[i];

    std::optional<Decomposition> dec = detail::try_decompose(u, guess);
    bool ok = dec && dec->converged && l2_norm(dec->eps) <= delta;
    if (!ok) {
      std::optional<Decomposition> re =
          detail::try_decompose(u, detail::global_frame_scan(u));
      if (re && re->converged && l2_norm(re->eps) <= delta) {
        dec = std::move(re);
        ok = true;
      } else if (re && (!dec || re->converged)) {
        dec = std::move(re);
      }
    }

    TrackRecord rec;
    rec.t = t;
    rec.departed = !ok;
    if (dec) {
      rec.lambda = dec->frame.lambda;
      rec.x = dec->frame.x0;
      rec.eps_l2 = l2_norm(dec->eps);
      rec.eps_h1 = h1_norm(dec->eps);
      rec.rho1 = dec->rho1;
      rec.rho2 = dec->rho2;
      try {
        const ModulationRates rates = modulation_rates(dec->eps);
        rec.rate_a = rates.a;
        rec.rate_b = rates.b;
      } catch (const std::exception&) {
        rec.rate_a = nan;
        rec.rate_b = nan;
      }
    } else {
      rec.lambda = guess.lambda;
      rec.x = guess.x0;
      rec.eps_l2 = nan;
      rec.eps_h1 = nan;
      rec.rho1 = nan;
      rec.rho2 = nan;
      rec.rate_a = nan;
      rec.rate_b = nan;
    }

    const double inv3 = 1.0 / (rec.lambda * rec.lambda * rec.lambda);
    if (havePrev && std::isfinite(inv3))
      s += (t - prevT) * 0.5 * (prevInv3 + inv3);
    rec.s = s;

    if (ok && std::isfinite(rec.rate_a)) {
      const double e2 = rec.eps_l2;
      const double e8 = lp_norm(dec->eps, 8);
      const double den = e2 + e2 * e8 * e8 * e8 * e8;
      if (den > 0)
        out.envelope_c = std::max(
            out.envelope_c,
            (std::abs(rec.rate_a) + std::abs(rec.rate_b)) / den);
    }

    out.records.push_back(rec);
    if (!ok) break;
    guess = dec->frame;
    prevT = t;
    prevInv3 = inv3;
    havePrev = true;
  }
  return out;
}

/// CSV with one row per track record.
inline void save_track_csv(const ModulationTrack& trackData,
                           const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << "t,s,lambda,x,eps_l2,eps_h1,rho1,rho2,rate_a,rate_b,departed\n";
  for (const TrackRecord& r : trackData.records) {
    os << detail::format17(r.t) << ',' << detail::format17(r.s) << ','
       << detail::format17(r.lambda) << ',' << detail::format17(r.x) << ','
       << detail::format17(r.eps_l2) << ',' << detail::format17(r.eps_h1)
       << ',' << detail::format17(r.rho1) << ',' << detail::format17(r.rho2)
       << ',' << detail::format17(r.rate_a) << ','
       << detail::format17(r.rate_b) << ',' << (r.departed ? 1 : 0) << '\n';
  }
  if (!os) throw std::runtime_error("failed writing " + path);
}

}  // namespace gkdvlab
