#pragma once

#include <Eigen/Dense>

#include "sfwm/pump_jsa.hpp"

namespace sfwm::schmidt {

inline constexpr double kTruncation = 1e-6;  // relative to c_1

struct SchmidtResult {
  Eigen::VectorXd coefficients;  // c_m, descending, sum c_m^2 = 1
  // Column m holds xi_m (signal) / psi_m (idler) sampled on the grid axes,
  // normalised so sum |xi_m|^2 dw = 1. Empty when modes were not requested.
  Eigen::MatrixXcd signal_modes;
  Eigen::MatrixXcd idler_modes;
  double purity = 0.0;         // sum c_m^4
  double schmidt_number = 0.0; // 1 / purity
  int retained_modes = 0;

  bool has_modes() const { return signal_modes.cols() > 0; }
};

// Singular value decomposition of f * sqrt(dws dwi). Modes are phase-fixed so
// each xi_m has its largest-magnitude sample real and positive.
SchmidtResult decompose(const jsa::JointSpectralAmplitude& jsa, bool with_modes = true);

// Purity from the Gram matrix, ||M M^H||_F^2 / ||M||_F^4 (no SVD).
double purity_gram(const jsa::JointSpectralAmplitude& jsa);

// Rebuilds sum_m c_m xi_m(ws) psi_m(wi) as function samples on the grid.
Eigen::MatrixXcd reconstruct(const SchmidtResult& result);

// g2_ss = 1 + P.
double predicted_autocorrelation(const SchmidtResult& result);
double predicted_autocorrelation(double purity);

// Inverse of the above; DomainError outside [1, 2].
double purity_from_g2(double g2_ss);

struct CauchySchwarz {
  double violation;  // g2_si^2 - g2_ss g2_ii
  double standard_error;
  double margin_sigma;
  bool violated;
};

// First-order error propagation of the three standard errors.
CauchySchwarz cauchy_schwarz_violation(double g2_si, double g2_ss, double g2_ii, double err_si,
                                       double err_ss, double err_ii);

}  // namespace sfwm::schmidt
