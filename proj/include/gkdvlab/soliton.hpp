#pragma once
/// \file soliton.hpp
/// The exact soliton profile Q, its modulated family, the derived
/// directions used as orthogonality constraints, and soliton constants.

#include <gkdvlab/grid.hpp>

#include <cmath>
#include <stdexcept>

namespace gkdvlab {

/// Modulation frame: scale lambda > 0 and center x0.
struct Frame {
  double lambda = 1.0;
  double x0 = 0.0;
};

/// Q(x) = 3^{1/4} / cosh(2x)^{1/2}.
inline double q_eval(double x) {
  constexpr double amp = 1.31607401295249238;  // 3^{1/4}
  return amp / std::sqrt(std::cosh(2 * x));
}

/// Q'(x) = -Q(x) tanh(2x) (closed form, not numerical differentiation).
inline double q_deriv(double x) { return -q_eval(x) * std::tanh(2 * x); }

/// Q''(x) = Q - Q^5 (the elliptic equation).
inline double q_deriv2(double x) {
  const double q = q_eval(x);
  return q - q * q * q * q * q;
}

/// Q'''(x) = Q' - 5 Q^4 Q' (derivative of the elliptic equation).
inline double q_deriv3(double x) {
  const double q = q_eval(x);
  return (1 - 5 * q * q * q * q) * q_deriv(x);
}

/// Scaling generator (Lambda Q)(x) = Q/2 + x Q'.
inline double lambda_q_eval(double x) {
  return q_eval(x) / 2 + x * q_deriv(x);
}

/// Q sampled on a grid.
inline Field q_profile(const Grid& grid) { return sample(grid, q_eval); }

/// Derived profile directions, all from closed-form derivatives of Q.
enum class Direction { Qy, LamQ, yQy, yLamQ };

inline Field q_direction(const Grid& grid, Direction kind) {
  switch (kind) {
    case Direction::Qy:
      return sample(grid, q_deriv);
    case Direction::LamQ:
      return sample(grid, lambda_q_eval);
    case Direction::yQy:
      return sample(grid, [](double y) { return y * q_deriv(y); });
    default:
      return sample(grid, [](double y) { return y * lambda_q_eval(y); });
  }
}

/// Rejects frames the grid cannot represent.  Width lambda/2 (the
/// e-folding length of Q^2) must span >= 4 spacings, or quadrature of the
/// peak loses more than 1e-8 of the mass.
inline void require_resolvable(const Grid& grid, const Frame& frame) {
  if (!(frame.lambda > 0) || !std::isfinite(frame.lambda))
    throw std::invalid_argument("frame scale must be positive and finite");
  if (frame.lambda < 8 * grid.spacing())
    throw std::invalid_argument("under-resolved frame");
  if (std::abs(frame.x0) > grid.L / 2)
    throw std::invalid_argument("x0 outside the box");
}

/// lambda^{-1/2} Q((x - x0)/lambda) sampled on the grid.  The scaling is
/// L^2-unitary, so the mass matches ||Q||_2^2 for every admissible frame.
inline Field soliton_on_grid(const Grid& grid, const Frame& frame) {
  require_resolvable(grid, frame);
  const double amp = 1.0 / std::sqrt(frame.lambda);
  return sample(grid, [&](double x) {
    return amp * q_eval((x - frame.x0) / frame.lambda);
  });
}

/// sup_x |f'' + f^5 - f| with the spectral second derivative.
inline double elliptic_residual(const Field& f) {
  const Field fxx = derivative(f, 2);
  Vec r = fxx.v + f.v.pow(5) - f.v;
  return r.abs().maxCoeff();
}

/// Residual of the soliton profile itself on the given grid.
inline double elliptic_residual(const Grid& grid) {
  return elliptic_residual(q_profile(grid));
}

/// Grid quadratures of the four soliton constants.
struct SolitonConstants {
  double intQ;         // int Q
  double massQ;        // int Q^2
  double kappa;        // (int Q)^2 / 4
  double scalingNorm;  // int (Q/2 + y Q')^2
};

inline SolitonConstants soliton_constants(const Grid& grid) {
  const Field q = q_profile(grid);
  const Field lam = q_direction(grid, Direction::LamQ);
  SolitonConstants c{};
  c.intQ = integral(q);
  c.massQ = inner_product(q, q);
  c.kappa = c.intQ * c.intQ / 4;
  c.scalingNorm = inner_product(lam, lam);
  return c;
}

}  // namespace gkdvlab
