#!/usr/bin/env python3
"""Regenerate tests/support/reference_values.hpp.

Computes high-precision reference constants used by the C++ test suite:

  * closed-form integrals of the soliton profile Q(x) = 3^{1/4} / cosh(2x)^{1/2}
    and of derived profiles (40-digit quadrature, emitted at full double
    precision),
  * weight normalizations for the localized mass/Morawetz functionals,
  * a space-time norm of the traveling soliton u(t,x) = Q(x - t),
  * dense generalized-eigenvalue extremes of the discretized virial
    quadratic form on a periodic box (float64 linear algebra).

Every constant is validated against an independent identity where one is
known before being written out.  Run from the repository root:

    python3 tests/support/gen_reference_values.py

Requires mpmath, numpy, scipy.
"""

from __future__ import annotations

import math
import pathlib

import mpmath as mp
import numpy as np
import scipy.linalg

mp.mp.dps = 40

OUT = pathlib.Path(__file__).resolve().parent / "reference_values.hpp"


# ----------------------------------------------------------------------------
# soliton profile and derivatives
# ----------------------------------------------------------------------------

A = mp.mpf(3) ** mp.mpf("0.25")


def q(x):
    return A / mp.sqrt(mp.cosh(2 * x))


def qp(x):
    return -q(x) * mp.tanh(2 * x)


def qpp(x):
    return q(x) - q(x) ** 5


def lam_q(x):
    """Scaling generator Q/2 + x Q'."""
    return q(x) / 2 + x * qp(x)


def quad(f):
    return mp.quad(f, [-mp.inf, 0, mp.inf])


def half_quad(f, a, b):
    return mp.quad(f, [a, b])


# ----------------------------------------------------------------------------
# scalar integrals
# ----------------------------------------------------------------------------

int_q = quad(q)
mass_q = quad(lambda x: q(x) ** 2)
int_q4 = quad(lambda x: q(x) ** 4)
int_q6 = quad(lambda x: q(x) ** 6)
int_qy2 = quad(lambda x: qp(x) ** 2)
int_y2qy2 = quad(lambda x: (x * qp(x)) ** 2)
scaling_norm = quad(lambda x: lam_q(x) ** 2)

assert mp.almosteq(mass_q, mp.sqrt(3) * mp.pi / 2, rel_eps=mp.mpf("1e-35"))
assert mp.almosteq(int_q4, mp.mpf(3), rel_eps=mp.mpf("1e-35"))
assert mp.almosteq(int_q6, 3 * int_qy2, rel_eps=mp.mpf("1e-35"))
assert mp.almosteq(scaling_norm, int_y2qy2 - mass_q / 4, rel_eps=mp.mpf("1e-35"))

q_at_0 = q(0)
q_at_1 = q(1)
kappa = int_q**2 / 4

# virial quadratic form evaluated on Q:
#   H(Q) = -3/2 int Q'^2 - 1/2 int Q^2 - 10 int x Q^3 Q' Q^2 - 5/2 int Q^4 Q^2
h_form_q = quad(
    lambda x: -1.5 * qp(x) ** 2
    - 0.5 * q(x) ** 2
    - 10 * x * q(x) ** 3 * qp(x) * q(x) ** 2
    - 2.5 * q(x) ** 6
)
assert mp.almosteq(
    h_form_q, -1.5 * int_qy2 - 0.5 * mass_q - mp.mpf(5) / 6 * int_q6,
    rel_eps=mp.mpf("1e-30"),
)
# int x Q^3 Q' eps^2 with eps = Q reduces via x (Q^4)'/4 -> -int Q^4 /4.

virial_j_q = -2 * kappa  # J(Q, 1) = <Q, P> - kappa with <Q, P> = -kappa

# modulation-rate linear response on eps = c Q:
#   f2 = d/dx (x LamQ) = Q/2 + 5/2 x Q' + x^2 Q''
int_q5f2 = quad(
    lambda x: q(x) ** 5 * (q(x) / 2 + 2.5 * x * qp(x) + x * x * qpp(x))
)
int_qf2 = quad(lambda x: q(x) * (q(x) / 2 + 2.5 * x * qp(x) + x * x * qpp(x)))
assert mp.almosteq(int_qf2, -scaling_norm, rel_eps=mp.mpf("1e-30"))

# left tail mass int_{x <= -5} Q^2
tail_q_left_5 = half_quad(lambda x: q(x) ** 2, -mp.inf, -5)

# energy of 1.1 Q:  E = 1/2 int u_x^2 - 1/6 int u^6
energy_1p1q = mp.mpf("1.21") / 2 * int_qy2 - mp.mpf("1.1") ** 6 / 6 * int_q6


# ----------------------------------------------------------------------------
# localized-mass weights
# ----------------------------------------------------------------------------

def bump(z):
    az = abs(z)
    if az <= 1:
        return mp.mpf(1)
    if az < 2:
        return mp.e ** (1 - 1 / (1 - (az - 1) ** 2))
    return mp.mpf(0)


bump_integral_1_2 = half_quad(bump, 1, 2)
int_phi_bump = 2 * (1 + bump_integral_1_2)

# Morawetz weight of Q at R = 20, center 0 on the box [-50, 50):
#   M = int Psi(x) Q(x)^2 dx,  Psi(x) = int_{-50}^{x} bump(t/20) dt
def psi_r20(x):
    # piecewise so every quadrature interval is smooth (corners at |x| = 20, 40)
    if x <= -40:
        return mp.mpf(0)
    if x <= -20:
        return 20 * half_quad(bump, -2, x / 20)
    if x <= 20:
        return 20 * bump_integral_1_2 + (x + 20)
    if x <= 40:
        return 20 * bump_integral_1_2 + 40 + 20 * half_quad(bump, 1, x / 20)
    return 40 * bump_integral_1_2 + 40


# The weight has corners at |x| = 20 and 40; Q^2 beyond |x| = 40 is ~1e-35.
morawetz_q_r20 = mp.quad(
    lambda x: psi_r20(x) * q(x) ** 2, [-40, -20, 0, 20, 40]
)
# cross-check: for x in [-20, 20], Psi(x) = 20 b + (x + 20), b = bump_integral_1_2,
# and the x term integrates to zero against Q^2, so M = 20(1 + b) mass_q up to
# Q^2 tail corrections beyond |x| = 20 (~1e-18 relative).
assert mp.almosteq(
    morawetz_q_r20, 20 * (1 + bump_integral_1_2) * mass_q, rel_eps=mp.mpf("1e-15")
)

# soliton localization weight phi = c Q(x / K), K = 3 sqrt(2), c = 1/(K int Q)
soliton_k = 3 * mp.sqrt(2)
soliton_weight_c = 1 / (soliton_k * int_q)


# ----------------------------------------------------------------------------
# space-time norm of the traveling soliton
# ----------------------------------------------------------------------------

# S_{[0,1]}(Q(x - t)) = int_x ( int_0^1 Q(x - t)^10 dt )^{1/2} dx
def inner_t(x):
    return mp.sqrt(mp.quad(lambda t: q(x - t) ** 10, [0, 1]))


scattering_q_unit_interval = mp.quad(inner_t, [-40, 0, 1, 40])


# ----------------------------------------------------------------------------
# discretized virial form: dense generalized-eigenvalue extremes
# ----------------------------------------------------------------------------

def pencil(n, box):
    """H, G matrices of the virial form on an n-point periodic box."""
    h = box / n
    x = -box / 2 + h * np.arange(n)
    qv = 3**0.25 / np.sqrt(np.cosh(2 * x))
    qpv = -qv * np.tanh(2 * x)
    lamv = qv / 2 + x * qpv
    k = 2 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / box
    # circulant second-derivative with the full k^2 symbol (Nyquist kept:
    # the potential integrates to zero, so dropping it plants a spurious
    # eigenvalue exactly at -1/2)
    col = np.real(np.fft.ifft(k**2))
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    a2 = col[idx]
    v = 10 * x * qv**3 * qpv + 2.5 * qv**4
    hm = h * (-1.5 * a2 - np.diag(0.5 + v))
    gm = h * (np.eye(n) + a2)
    return hm, gm, qv, lamv, x, h


def constrained_extremes(n, box):
    hm, gm, qv, lamv, x, h = pencil(n, box)
    ch = np.linalg.cholesky(gm)
    hh = scipy.linalg.solve_triangular(ch, hm, lower=True)
    hh = scipy.linalg.solve_triangular(ch, hh.T, lower=True).T
    hh = 0.5 * (hh + hh.T)
    cmat = np.column_stack([h * qv, h * x * lamv])
    chat = scipy.linalg.solve_triangular(ch, cmat, lower=True)
    qq, _ = np.linalg.qr(chat, mode="complete")
    u = qq[:, 2:]
    w = np.linalg.eigvalsh(u.T @ hh @ u)
    return w[0], w[-1]


def unconstrained_extremes(n, box):
    hm, gm, *_ = pencil(n, box)
    w = scipy.linalg.eigh(hm, gm, eigvals_only=True)
    return w[0], w[-1]


BOX = 50.0
c_min_512, c_max_512 = constrained_extremes(512, BOX)
c_min_1024, c_max_1024 = constrained_extremes(1024, BOX)
u_min_512, u_max_512 = unconstrained_extremes(512, BOX)

assert abs(c_max_512 - c_max_1024) < 1e-9
delta1 = abs(c_max_1024)


# ----------------------------------------------------------------------------
# emit header
# ----------------------------------------------------------------------------

def lit(v):
    return f"{float(v):.17e}"


CONSTANTS = [
    ("q_at_0", q_at_0, "Q(0) = 3^{1/4}"),
    ("q_at_1", q_at_1, "Q(1)"),
    ("int_q", int_q, "int Q dx"),
    ("mass_q", mass_q, "int Q^2 dx = sqrt(3) pi / 2"),
    ("int_q6", int_q6, "int Q^6 dx"),
    ("int_qy2", int_qy2, "int Q'^2 dx  (= int Q^6 / 3)"),
    ("scaling_norm", scaling_norm, "int (Q/2 + x Q')^2 dx"),
    ("kappa", kappa, "(int Q)^2 / 4"),
    ("h_form_q", h_form_q, "virial quadratic form evaluated at Q"),
    ("virial_j_q", virial_j_q, "J(Q, 1) = -2 kappa"),
    ("int_q5f2", int_q5f2, "int Q^5 (x LamQ)' dx"),
    ("tail_q_left_5", tail_q_left_5, "int_{x <= -5} Q^2 dx"),
    ("energy_1p1q", energy_1p1q, "E(1.1 Q)"),
    ("bump_integral_1_2", bump_integral_1_2, "int_1^2 of the C^1 bump"),
    ("int_phi_bump", int_phi_bump, "int of the bump over the line"),
    ("morawetz_q_r20", morawetz_q_r20, "Morawetz weight of Q, R=20, box 100"),
    ("soliton_weight_c", soliton_weight_c, "1 / (3 sqrt(2) int Q)"),
    (
        "scattering_q_unit_interval",
        scattering_q_unit_interval,
        "S_{[0,1]} of the traveling soliton",
    ),
    ("coerc_max_l50_n512", c_max_512, "constrained pencil max, N=512, box 50"),
    ("coerc_max_l50_n1024", c_max_1024, "constrained pencil max, N=1024, box 50"),
    ("coerc_min_l50_n1024", c_min_1024, "constrained pencil min, N=1024, box 50"),
    ("uncon_min_l50_n512", u_min_512, "unconstrained pencil min, N=512, box 50"),
    ("uncon_max_l50_n512", u_max_512, "unconstrained pencil max, N=512, box 50"),
    ("delta1_l50", delta1, "|extremal constrained eigenvalue|, box 50"),
]


def main():
    lines = [
        "#pragma once",
        "// Generated by gen_reference_values.py -- do not edit by hand.",
        "// High-precision reference constants for the test suite.",
        "",
        "namespace refvals {",
        "",
    ]
    for name, value, comment in CONSTANTS:
        lines.append(f"// {comment}")
        lines.append(f"inline constexpr double {name} = {lit(value)};")
        lines.append("")
    lines.append("}  // namespace refvals")
    OUT.write_text("\n".join(lines) + "\n")
    for name, value, _ in CONSTANTS:
        print(f"{name:>30s} = {lit(value)}")
    print(f"\nwrote {OUT}")


if __name__ == "__main__":
    main()
