#pragma once
/// \file linearized.hpp
/// The linearized operator L around Q, the nonlinear remainder R(eps),
/// the virial quadratic form H, and a constrained coercivity estimator
/// for the discretized H against the H^1 Gram pencil.

#include <gkdvlab/grid.hpp>
#include <gkdvlab/soliton.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gkdvlab {

/// L eps = -eps_xx + eps - 5 Q^4 eps (Q^4 from the closed form).
inline Field apply_L(const Field& eps) {
  const Field exx = derivative(eps, 2);
  Vec v(eps.grid.N);
  for (int i = 0; i < eps.grid.N; ++i) {
    const double q = q_eval(eps.grid.node(i));
    const double q4 = q * q * q * q;
    v[i] = -exx.v[i] + eps.v[i] - 5 * q4 * eps.v[i];
  }
  return Field{eps.grid, std::move(v)};
}

/// R(eps) = 10 Q^3 eps^2 + 10 Q^2 eps^3 + 5 Q eps^4 + eps^5, the part of
/// (Q + eps)^5 - Q^5 beyond the linear term, with dealiased eps powers.
inline Field nonlinear_remainder(const Field& eps) {
  const Field e2 = pow_dealiased(eps, 2);
  const Field e3 = pow_dealiased(eps, 3);
  const Field e4 = pow_dealiased(eps, 4);
  const Field e5 = pow_dealiased(eps, 5);
  Vec v(eps.grid.N);
  for (int i = 0; i < eps.grid.N; ++i) {
    const double q = q_eval(eps.grid.node(i));
    v[i] = 10 * q * q * q * e2.v[i] + 10 * q * q * e3.v[i] +
           5 * q * e4.v[i] + e5.v[i];
  }
  return Field{eps.grid, std::move(v)};
}

namespace detail {

/// Potential weight of the virial form: 10 y Q^3 Q' + (5/2) Q^4.
inline double virial_weight(double y) {
  const double q = q_eval(y);
  return 10 * y * q * q * q * q_deriv(y) + 2.5 * q * q * q * q;
}

}  // namespace detail

/// Symmetric bilinear extension of the virial form:
///   H(f, g) = -(3/2) int f_x g_x - 1/2 int f g
///             - int (10 y Q^3 Q' + (5/2) Q^4) f g.
inline double quadratic_form_H_bilinear(const Field& f, const Field& g) {
  require_same_grid(f, g);
  const Field fx = derivative(f, 1);
  const Field gx = derivative(g, 1);
  double acc = -1.5 * inner_product(fx, gx) - 0.5 * inner_product(f, g);
  double wsum = 0;
  for (int i = 0; i < f.grid.N; ++i)
    wsum += detail::virial_weight(f.grid.node(i)) * f.v[i] * g.v[i];
  return acc - f.grid.spacing() * wsum;
}

/// H(eps, eps).
inline double quadratic_form_H(const Field& eps) {
  return quadratic_form_H_bilinear(eps, eps);
}

/// Classification of the constrained extremum of H against the H^1 norm.
enum class FormSign { positive_definite, negative_definite, indefinite };

inline const char* to_string(FormSign s) {
  switch (s) {
    case FormSign::positive_definite: return "positive-definite";
    case FormSign::negative_definite: return "negative-definite";
    default: return "indefinite";
  }
}

/// Result of the constrained pencil solve.
struct ConstrainedSpectrum {
  double extremal = 0;   // pencil eigenvalue closest to zero
  double min_value = 0;  // smallest pencil eigenvalue
  double max_value = 0;  // largest pencil eigenvalue
  double delta1 = 0;     // |extremal|
  FormSign sign = FormSign::indefinite;
  Field extremizer;      // unit H^1 norm, satisfies every constraint
  std::string constraint_description;
};

/// Extremal Rayleigh value of H restricted to the orthogonal complement of
/// the constraint fields, measured against the H^1 norm.
///
/// Dense assembly: the circulant second-derivative block keeps the full
/// k^2 symbol including the Nyquist bin.  The potential weight integrates
/// to zero exactly, so a Nyquist-zeroed second derivative would admit a
/// sawtooth eigenvector with Rayleigh quotient exactly -1/2, an artifact
/// of the discretization rather than a property of the form.
inline ConstrainedSpectrum coercivity_estimate(
    const Grid& grid, const std::vector<Field>& constraints,
    const std::string& description = "") {
  const int N = grid.N;
  if (N > 2048)
    throw std::invalid_argument(
        "grid too large for a dense coercivity estimate (use N <= 2048)");
  const double h = grid.spacing();
  const int m = static_cast<int>(constraints.size());
  for (const Field& c : constraints)
    if (!(c.grid == grid)) throw std::invalid_argument("grid mismatch");

  // First column of the circulant -d^2: inverse transform of k^2.
  CVec symbol(N);
  for (int j = 0; j < N; ++j) {
    const double k = grid.wavenumber(j);
    symbol[j] = k * k;
  }
  const Field col = from_spectrum(grid, symbol);

  Eigen::MatrixXd a2(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) a2(i, j) = col.v[(i - j + N) % N];

  Eigen::MatrixXd hm = -1.5 * h * a2;
  Eigen::MatrixXd gm = h * a2;
  for (int i = 0; i < N; ++i) {
    hm(i, i) -= h * (0.5 + detail::virial_weight(grid.node(i)));
    gm(i, i) += h;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(gm);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("singular Gram matrix");
  const Eigen::MatrixXd lower = llt.matrixL();

  // Congruence to an ordinary symmetric problem: Hhat = L^{-1} H L^{-T}.
  Eigen::MatrixXd hhat = lower.triangularView<Eigen::Lower>().solve(hm);
  hhat = lower.triangularView<Eigen::Lower>()
             .solve(hhat.transpose())
             .transpose();
  hhat = 0.5 * (hhat + hhat.transpose()).eval();

  Eigen::MatrixXd basis;  // orthonormal complement of the constraints
  if (m == 0) {
    basis = Eigen::MatrixXd::Identity(N, N);
  } else {
    Eigen::MatrixXd cmat(N, m);
    for (int i = 0; i < m; ++i) cmat.col(i) = h * constraints[i].v.matrix();
    const Eigen::MatrixXd chat =
        lower.triangularView<Eigen::Lower>().solve(cmat);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(chat);
    const Eigen::MatrixXd rdiag =
        qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    const double scale = chat.colwise().norm().maxCoeff();
    for (int i = 0; i < m; ++i)
      if (std::abs(rdiag(i, i)) < 1e-10 * scale)
        throw std::invalid_argument("dependent constraints");
    const Eigen::MatrixXd qfull =
        qr.householderQ() * Eigen::MatrixXd::Identity(N, N);
    basis = qfull.rightCols(N - m);
  }

  Eigen::MatrixXd reduced = basis.transpose() * hhat * basis;
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigenvalue iteration failed");
  const Eigen::VectorXd evals = es.eigenvalues();
  const int last = static_cast<int>(evals.size()) - 1;

  ConstrainedSpectrum out;
  out.min_value = evals[0];
  out.max_value = evals[last];
  const int pick = (std::abs(evals[0]) <= std::abs(evals[last])) ? 0 : last;
  out.extremal = evals[pick];
  out.delta1 = std::abs(out.extremal);
  if (out.min_value > 0)
    out.sign = FormSign::positive_definite;
  else if (out.max_value < 0)
    out.sign = FormSign::negative_definite;
  else
    out.sign = FormSign::indefinite;

  // Map the reduced eigenvector back: v = L^{-T} (basis z), then normalize
  // to unit H^1 norm in the pencil metric.
  Eigen::VectorXd vhat = basis * es.eigenvectors().col(pick);
  Eigen::VectorXd v = lower.transpose()
                          .triangularView<Eigen::Upper>()
                          .solve(vhat);
  const double norm = std::sqrt(v.dot(gm * v));
  v /= norm;
  out.extremizer = Field{grid, v.array()};
  out.constraint_description =
      description.empty() ? std::to_string(m) + " constraints" : description;
  return out;
}

}  // namespace gkdvlab
