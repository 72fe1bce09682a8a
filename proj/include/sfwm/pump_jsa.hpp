#pragma once

#include <complex>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sfwm/phasematch.hpp"

namespace sfwm::jsa {

struct PumpSpec {
  double wavelength_nm = 729.0;
  double bandwidth_nm = 3.1;  // FWHM of |alpha|^2
  double mean_pairs = 0.01;   // effective gain per pulse

  void validate() const;
  double center_omega() const;
  // FWHM of |alpha(omega)|^2 in rad/ps.
  double intensity_fwhm_omega() const;
  // sigma of alpha(omega) = exp(-(omega - wp)^2 / (2 sigma^2)).
  double sigma_omega() const;
};

// Transform-limited Gaussian envelope, unit peak.
std::complex<double> pump_envelope(double omega, const PumpSpec& pump);

// A(W) = int alpha(w') alpha(W - w') dw', closed form for the Gaussian envelope:
// sigma sqrt(pi) exp(-(W - 2 wp)^2 / (4 sigma^2)).
std::complex<double> pump_autoconvolution(double total_omega, const PumpSpec& pump);

using Envelope = std::function<std::complex<double>(double)>;

// Autoconvolution of an arbitrary envelope by adaptive Gauss-Kronrod quadrature
// over [center - half_width, center + half_width]. Throws NumericalError when
// the error estimate exceeds the requested relative tolerance.
std::complex<double> autoconvolution_numeric(const Envelope& envelope, double total_omega,
                                             double center, double half_width,
                                             double rel_tol = 1e-12);

enum class Arm { Signal, Idler };

struct AxisSpec {
  double center_nm;
  double span_nm;  // full width
  int points;
};

// Samples uniform in angular frequency between the span's endpoints, ascending omega.
class SpectralAxis {
 public:
  static constexpr int kMinPoints = 64;

  explicit SpectralAxis(AxisSpec spec);

  const AxisSpec& spec() const { return spec_; }
  int size() const { return static_cast<int>(omega_.size()); }
  const std::vector<double>& omega() const { return omega_; }
  double omega(int j) const { return omega_[j]; }
  double wavelength_nm(int j) const;
  double step() const { return step_; }
  double omega_span() const { return omega_.back() - omega_.front(); }

 private:
  AxisSpec spec_;
  std::vector<double> omega_;
  double step_;
};

struct SpectralGrid {
  SpectralAxis signal;
  SpectralAxis idler;

  const SpectralAxis& axis(Arm arm) const { return arm == Arm::Signal ? signal : idler; }
};

// Complex amplitude with rows indexed by signal samples, columns by idler
// samples, normalised so sum |f|^2 dws dwi = 1.
struct JointSpectralAmplitude {
  SpectralGrid grid;
  Eigen::MatrixXcd amplitude;

  double norm_squared() const;
  void normalize();
  Eigen::MatrixXd intensity() const { return amplitude.cwiseAbs2(); }
};

// Spans (in nm) each axis must cover for the Gaussian-equivalent central lobe
// to fit kCoverageFactor times over.
struct CoverageRequirement {
  double signal_span_nm;
  double idler_span_nm;
  double signal_lobe_fwhm_omega;
  double idler_lobe_fwhm_omega;
};

inline constexpr double kCoverageFactor = 6.0;

CoverageRequirement required_coverage(const SpectralGrid& grid, const PumpSpec& pump,
                                      const phasematch::WaveguideSpec& spec);

// Grid centred on the phasematched wavelengths, with spans widened when needed
// to satisfy required_coverage. Spans never shrink below the given defaults.
SpectralGrid make_phasematched_grid(const PumpSpec& pump, const phasematch::WaveguideSpec& spec,
                                    int points, double signal_span_nm, double idler_span_nm,
                                    bool auto_span);

// f = A(ws + wi) * phi(ws, wi), normalised. Throws ConfigError on a coverage violation.
JointSpectralAmplitude build_jsa(const SpectralGrid& grid, const PumpSpec& pump,
                                 const phasematch::WaveguideSpec& spec, int threads = 1);

// Builds a normalised JSA by sampling f on the grid (test fixtures, custom sources).
JointSpectralAmplitude jsa_from_function(
    const SpectralGrid& grid, const std::function<std::complex<double>(double, double)>& f);

struct TopHat {
  double center_nm;
  double width_nm;
};

struct GaussianPassband {
  double center_nm;
  double fwhm_nm;  // of the intensity transmission
};

struct SpectralFilter {
  Arm target = Arm::Signal;
  std::variant<TopHat, GaussianPassband> shape;

  // Amplitude transmission t(lambda), 0 <= t <= 1.
  double amplitude_transmission(double wavelength_nm) const;
};

struct FilterResult {
  JointSpectralAmplitude filtered;
  double transmission;  // heralded-rate (intensity weighted), before renormalisation
};

FilterResult apply_filter(const JointSpectralAmplitude& jsa, const SpectralFilter& filter);

struct MarginalSample {
  double omega;
  double wavelength_nm;
  double weight;
};

// Sum over the other axis of |f|^2, normalised to unit sum.
std::vector<MarginalSample> marginal_spectrum(const JointSpectralAmplitude& jsa, Arm which);

// Second moments of |f|^2 restricted to the central phasematching lobe
// (|dk L / 2| < pi at the nominal birefringence), in (rad/ps)^2.
struct LobeMoments {
  double mean_signal_omega;
  double mean_idler_omega;
  double var_signal;
  double var_idler;
  double covariance;
  double correlation() const;
};

LobeMoments central_lobe_moments(const JointSpectralAmplitude& jsa,
                                 const phasematch::WaveguideSpec& spec);

struct ContourPoint {
  std::string track;  // "pump_fwhm" or "phasematch_fwhm"
  double signal_nm;
  double idler_nm;
};

// Half-maximum contours of |A|^2 and |phi|^2 (uniform guide) sampled along the
// signal axis of the grid, for overlaying on JSI plots.
std::vector<ContourPoint> fwhm_contours(const SpectralGrid& grid, const PumpSpec& pump,
                                        const phasematch::WaveguideSpec& spec);

}  // namespace sfwm::jsa
