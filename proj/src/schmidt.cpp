#include "sfwm/schmidt.hpp"

#include <cmath>
#include <string>

#include "sfwm/errors.hpp"

namespace sfwm::schmidt {

SchmidtResult decompose(const jsa::JointSpectralAmplitude& jsa, bool with_modes) {
  const double ds = jsa.grid.signal.step();
  const double di = jsa.grid.idler.step();
  const Eigen::MatrixXcd m = jsa.amplitude * std::sqrt(ds * di);
  if (!m.allFinite()) throw NumericalError("joint spectral amplitude contains non-finite values");
  if (m.norm() == 0.0) throw NumericalError("cannot decompose an all-zero amplitude");

  const unsigned opts = with_modes ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, opts);
  if (svd.info() != Eigen::Success) throw NumericalError("singular value decomposition failed");

  const Eigen::VectorXd& sv = svd.singularValues();
  int keep = 0;
  while (keep < sv.size() && sv[keep] >= kTruncation * sv[0]) ++keep;

  SchmidtResult r;
  r.coefficients = sv.head(keep);
  r.coefficients /= r.coefficients.norm();
  r.retained_modes = keep;
  r.purity = r.coefficients.array().pow(4).sum();
  r.schmidt_number = 1.0 / r.purity;
  if (!with_modes) return r;

  r.signal_modes = svd.matrixU().leftCols(keep) / std::sqrt(ds);
  r.idler_modes = svd.matrixV().leftCols(keep).conjugate() / std::sqrt(di);
  for (int k = 0; k < keep; ++k) {
    Eigen::Index peak = 0;
    r.signal_modes.col(k).cwiseAbs2().maxCoeff(&peak);
    const auto z = r.signal_modes(peak, k);
    const auto phase = z / std::abs(z);
    r.signal_modes.col(k) *= std::conj(phase);
    r.idler_modes.col(k) *= phase;
  }
  return r;
}

double purity_gram(const jsa::JointSpectralAmplitude& jsa) {
  const Eigen::MatrixXcd& f = jsa.amplitude;
  const double n2 = f.squaredNorm();
  if (!(n2 > 0.0)) throw NumericalError("cannot compute purity of an all-zero amplitude");
  // the smaller Gram matrix carries the same nonzero spectrum
  const Eigen::MatrixXcd g = f.rows() <= f.cols() ? Eigen::MatrixXcd(f * f.adjoint())
                                                  : Eigen::MatrixXcd(f.adjoint() * f);
  return g.squaredNorm() / (n2 * n2);
}

Eigen::MatrixXcd reconstruct(const SchmidtResult& result) {
  if (!result.has_modes()) throw DomainError("Schmidt result carries no mode functions");
  return result.signal_modes * result.coefficients.asDiagonal() * result.idler_modes.transpose();
}

double predicted_autocorrelation(double purity) { return 1.0 + purity; }

double predicted_autocorrelation(const SchmidtResult& result) {
  return predicted_autocorrelation(result.purity);
}

double purity_from_g2(double g2_ss) {
  if (!(g2_ss >= 1.0 && g2_ss <= 2.0))
    throw DomainError("g2_ss = " + std::to_string(g2_ss) +
                      " lies outside [1, 2]; estimator dominated by noise or background");
  return g2_ss - 1.0;
}

CauchySchwarz cauchy_schwarz_violation(double g2_si, double g2_ss, double g2_ii, double err_si,
                                       double err_ss, double err_ii) {
  if (g2_si < 0 || g2_ss < 0 || g2_ii < 0 || err_si < 0 || err_ss < 0 || err_ii < 0)
    throw DomainError("Cauchy-Schwarz inputs must be non-negative");
  CauchySchwarz cs{};
  cs.violation = g2_si * g2_si - g2_ss * g2_ii;
  cs.standard_error = std::sqrt(std::pow(2 * g2_si * err_si, 2) + std::pow(g2_ii * err_ss, 2) +
                                std::pow(g2_ss * err_ii, 2));
  cs.violated = cs.violation > 0.0;
  cs.margin_sigma = cs.standard_error > 0 ? cs.violation / cs.standard_error
                    : cs.violation > 0    ? INFINITY
                                          : 0.0;
  return cs;
}

}  // namespace sfwm::schmidt
