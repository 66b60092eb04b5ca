#pragma once
// Generated by gen_reference_values.py -- do not edit by hand.
// High-precision reference constants for the test suite.

namespace refvals {

// Q(0) = 3^{1/4}
inline constexpr double q_at_0 = 1.31607401295249238e+00;

// Q(1)
inline constexpr double q_at_1 = 6.78515265197235817e-01;

// int Q dx
inline constexpr double int_q = 3.45082180766962798e+00;

// int Q^2 dx = sqrt(3) pi / 2
inline constexpr double mass_q = 2.72069904635132698e+00;

// int Q^6 dx
inline constexpr double int_q6 = 4.08104856952699002e+00;

// int Q'^2 dx  (= int Q^6 / 3)
inline constexpr double int_qy2 = 1.36034952317566349e+00;

// int (Q/2 + x Q')^2 dx
inline constexpr double scaling_norm = 8.39131977559646081e-01;

// (int Q)^2 / 4
inline constexpr double kappa = 2.97704278707206971e+00;

// virial quadratic form evaluated at Q
inline constexpr double h_form_q = -6.80174761587831700e+00;

// J(Q, 1) = -2 kappa
inline constexpr double virial_j_q = -5.95408557414413941e+00;

// int Q^5 (x LamQ)' dx
inline constexpr double int_q5f2 = 2.54128892090485559e-01;

// int_{x <= -5} Q^2 dx
inline constexpr double tail_q_left_5 = 7.86349849546559283e-05;

// E(1.1 Q)
inline constexpr double energy_1p1q = -3.81959619292024377e-01;

// int_1^2 of the C^1 bump
inline constexpr double bump_integral_1_2 = 6.03450161218938130e-01;

// int of the bump over the line
inline constexpr double int_phi_bump = 3.20690032243787604e+00;

// Morawetz weight of Q, R=20, box 100
inline constexpr double morawetz_q_r20 = 8.72501064900049244e+01;

// 1 / (3 sqrt(2) int Q)
inline constexpr double soliton_weight_c = 6.83032255886570350e-02;

// S_{[0,1]} of the traveling soliton
inline constexpr double scattering_q_unit_interval = 4.13040690003952360e+00;

// constrained pencil max, N=512, box 50
inline constexpr double coerc_max_l50_n512 = -5.04511986078413299e-01;

// constrained pencil max, N=1024, box 50
inline constexpr double coerc_max_l50_n1024 = -5.04511986079020591e-01;

// constrained pencil min, N=1024, box 50
inline constexpr double coerc_min_l50_n1024 = -1.67044822228989975e+00;

// unconstrained pencil min, N=512, box 50
inline constexpr double uncon_min_l50_n512 = -2.24618511824857903e+00;

// unconstrained pencil max, N=512, box 50
inline constexpr double uncon_max_l50_n512 = -3.29362986693001680e-01;

// |extremal constrained eigenvalue|, box 50
inline constexpr double delta1_l50 = 5.04511986079020591e-01;

}  // namespace refvals
