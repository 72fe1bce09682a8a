#include "sfwm/pump_jsa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sfwm/errors.hpp"
#include "sfwm/units.hpp"

namespace sfwm::jsa {

namespace {

using phasematch::WaveguideSpec;
constexpr double kLn2 = std::numbers::ln2;
// |sinc x|^2 = 1/2 at x = 1.39155737...
constexpr double kSincHalfPower = 1.3915573782515103;

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

}  // namespace

void PumpSpec::validate() const {
  if (!(wavelength_nm > 0.0)) throw ConfigError("pump wavelength must be positive");
  if (!(bandwidth_nm > 0.0)) throw ConfigError("pump bandwidth must be positive");
  if (!(mean_pairs > 0.0)) throw ConfigError("pump mean_pairs must be positive");
}

double PumpSpec::center_omega() const { return units::omega_from_nm(wavelength_nm); }

double PumpSpec::intensity_fwhm_omega() const {
  return units::kTwoPi * units::kSpeedOfLight * (bandwidth_nm * 1e-3) /
         std::pow(wavelength_nm * 1e-3, 2);
}

double PumpSpec::sigma_omega() const {
  // |alpha|^2 = exp(-(w - wp)^2 / sigma^2) has FWHM 2 sigma sqrt(ln 2)
  return intensity_fwhm_omega() / (2.0 * std::sqrt(kLn2));
}

std::complex<double> pump_envelope(double omega, const PumpSpec& pump) {
  const double x = (omega - pump.center_omega()) / pump.sigma_omega();
  return std::exp(-0.5 * x * x);
}

std::complex<double> pump_autoconvolution(double total_omega, const PumpSpec& pump) {
  const double s = pump.sigma_omega();
  const double x = total_omega - 2.0 * pump.center_omega();
  return s * std::sqrt(std::numbers::pi) * std::exp(-x * x / (4.0 * s * s));
}

std::complex<double> autoconvolution_numeric(const Envelope& envelope, double total_omega,
                                             double center, double half_width,
                                             double rel_tol) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double a = center - half_width;
  const double b = center + half_width;
  auto part = [&](bool imag) {
    auto integrand = [&](double w) {
      const auto v = envelope(w) * envelope(total_omega - w);
      return imag ? v.imag() : v.real();
    };
    double error = 0.0;
    const double value = Quad::integrate(integrand, a, b, 15, rel_tol * 1e-2, &error);
    return std::pair{value, error};
  };
  const auto [re, re_err] = part(false);
  const auto [im, im_err] = part(true);
  const std::complex<double> result{re, im};
  const double err = std::hypot(re_err, im_err);
  if (err > std::max(rel_tol * std::abs(result), 1e-300))
    throw NumericalError("autoconvolution quadrature did not converge (error estimate " +
                         fmt_double(err) + ")");
  return result;
}

SpectralAxis::SpectralAxis(AxisSpec spec) : spec_(spec) {
  if (spec.points < kMinPoints)
    throw ConfigError("grid axis needs at least " + std::to_string(kMinPoints) + " points, got " +
                      std::to_string(spec.points));
  if (!(spec.span_nm > 0.0) || !(spec.center_nm - spec.span_nm / 2 > 0.0))
    throw ConfigError("grid axis span must be positive and below twice the centre wavelength");
  const double lo = units::omega_from_nm(spec.center_nm + spec.span_nm / 2);
  const double hi = units::omega_from_nm(spec.center_nm - spec.span_nm / 2);
  step_ = (hi - lo) / (spec.points - 1);
  omega_.resize(spec.points);
  for (int j = 0; j < spec.points; ++j) omega_[j] = lo + step_ * j;
  omega_.back() = hi;
}

double SpectralAxis::wavelength_nm(int j) const { return units::nm_from_omega(omega_[j]); }

double JointSpectralAmplitude::norm_squared() const {
  return amplitude.squaredNorm() * grid.signal.step() * grid.idler.step();
}

void JointSpectralAmplitude::normalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0) || !std::isfinite(n2))
    throw NumericalError("joint spectral amplitude has zero or non-finite norm");
  amplitude /= std::sqrt(n2);
}

CoverageRequirement required_coverage(const SpectralGrid& grid, const PumpSpec& pump,
                                      const WaveguideSpec& spec) {
  const double ws = units::omega_from_nm(grid.signal.spec().center_nm);
  const double wi = units::omega_from_nm(grid.idler.spec().center_nm);
  const double h = 1e-3 * std::max(grid.signal.step(), grid.idler.step());
  const double a =
      (phasematch::delta_k(ws + h, wi, spec) - phasematch::delta_k(ws - h, wi, spec)) / (2 * h);
  const double b =
      (phasematch::delta_k(ws, wi + h, spec) - phasematch::delta_k(ws, wi - h, spec)) / (2 * h);
  // Gaussian-equivalent |f|^2 = exp(-x^T Lambda x / 2) from the two half-maximum widths.
  const double wp = std::sqrt(2.0) * pump.intensity_fwhm_omega();
  const double wk = 4.0 * kSincHalfPower / spec.length_um();
  Eigen::Matrix2d lambda;
  const Eigen::Vector2d u{1.0, 1.0};
  const Eigen::Vector2d g{a, b};
  lambda = 8.0 * kLn2 * (u * u.transpose() / (wp * wp) + g * g.transpose() / (wk * wk));
  const Eigen::Matrix2d cov = lambda.inverse();
  const double fwhm_s = 2.0 * std::sqrt(2.0 * kLn2 * cov(0, 0));
  const double fwhm_i = 2.0 * std::sqrt(2.0 * kLn2 * cov(1, 1));
  auto to_nm = [](double omega_span, double center_nm) {
    const double w0 = units::omega_from_nm(center_nm);
    return units::nm_from_omega(w0 - omega_span / 2) - units::nm_from_omega(w0 + omega_span / 2);
  };
  CoverageRequirement req{};
  req.signal_lobe_fwhm_omega = fwhm_s;
  req.idler_lobe_fwhm_omega = fwhm_i;
  req.signal_span_nm = to_nm(kCoverageFactor * fwhm_s, grid.signal.spec().center_nm);
  req.idler_span_nm = to_nm(kCoverageFactor * fwhm_i, grid.idler.spec().center_nm);
  return req;
}

namespace {

void check_coverage(const SpectralGrid& grid, const PumpSpec& pump, const WaveguideSpec& spec) {
  const auto req = required_coverage(grid, pump, spec);
  const bool ok_s = grid.signal.omega_span() >= kCoverageFactor * req.signal_lobe_fwhm_omega;
  const bool ok_i = grid.idler.omega_span() >= kCoverageFactor * req.idler_lobe_fwhm_omega;
  if (!ok_s || !ok_i)
    throw ConfigError("grid coverage violation: need signal span >= " +
                      fmt_double(req.signal_span_nm) + " nm and idler span >= " +
                      fmt_double(req.idler_span_nm) + " nm, have " +
                      fmt_double(grid.signal.spec().span_nm) + " and " +
                      fmt_double(grid.idler.spec().span_nm) + " nm");
}

}  // namespace

SpectralGrid make_phasematched_grid(const PumpSpec& pump, const WaveguideSpec& spec, int points,
                                    double signal_span_nm, double idler_span_nm,
                                    bool auto_span) {
  const auto pm = phasematch::solve_phasematch(pump.wavelength_nm, spec);
  SpectralGrid grid{SpectralAxis({pm.signal_nm, signal_span_nm, points}),
                    SpectralAxis({pm.idler_nm, idler_span_nm, points})};
  if (!auto_span) return grid;
  const auto req = required_coverage(grid, pump, spec);
  // small margin so the rounded nm span still clears the omega-space test
  const double s = std::max(signal_span_nm, req.signal_span_nm * 1.001);
  const double i = std::max(idler_span_nm, req.idler_span_nm * 1.001);
  if (s == signal_span_nm && i == idler_span_nm) return grid;
  return SpectralGrid{SpectralAxis({pm.signal_nm, s, points}),
                      SpectralAxis({pm.idler_nm, i, points})};
}

JointSpectralAmplitude build_jsa(const SpectralGrid& grid, const PumpSpec& pump,
                                 const WaveguideSpec& spec, int threads) {
  pump.validate();
  spec.validate();
  check_coverage(grid, pump, spec);
  const auto& ws = grid.signal.omega();
  const auto& wi = grid.idler.omega();
  Eigen::MatrixXcd f = phasematch::phasematching_grid(ws, wi, spec, threads);
  for (int k = 0; k < grid.idler.size(); ++k)
    for (int j = 0; j < grid.signal.size(); ++j) f(j, k) *= pump_autoconvolution(ws[j] + wi[k], pump);
  JointSpectralAmplitude out{grid, std::move(f)};
  out.normalize();
  return out;
}

JointSpectralAmplitude jsa_from_function(
    const SpectralGrid& grid, const std::function<std::complex<double>(double, double)>& f) {
  Eigen::MatrixXcd m(grid.signal.size(), grid.idler.size());
  for (int k = 0; k < grid.idler.size(); ++k)
    for (int j = 0; j < grid.signal.size(); ++j) m(j, k) = f(grid.signal.omega(j), grid.idler.omega(k));
  JointSpectralAmplitude out{grid, std::move(m)};
  out.normalize();
  return out;
}

double SpectralFilter::amplitude_transmission(double wavelength_nm) const {
  if (const auto* t = std::get_if<TopHat>(&shape))
    return std::abs(wavelength_nm - t->center_nm) <= t->width_nm / 2 ? 1.0 : 0.0;
  const auto& g = std::get<GaussianPassband>(shape);
  const double x = (wavelength_nm - g.center_nm) / g.fwhm_nm;
  return std::exp(-2.0 * kLn2 * x * x);
}

FilterResult apply_filter(const JointSpectralAmplitude& jsa, const SpectralFilter& filter) {
  if (const auto* t = std::get_if<TopHat>(&filter.shape); t && !(t->width_nm > 0.0))
    throw ConfigError("top-hat filter width must be positive");
  if (const auto* g = std::get_if<GaussianPassband>(&filter.shape); g && !(g->fwhm_nm > 0.0))
    throw ConfigError("gaussian filter fwhm must be positive");
  const auto& axis = jsa.grid.axis(filter.target);
  Eigen::VectorXd t(axis.size());
  for (int j = 0; j < axis.size(); ++j) t[j] = filter.amplitude_transmission(axis.wavelength_nm(j));
  FilterResult out{jsa, 0.0};
  if (filter.target == Arm::Signal)
    out.filtered.amplitude = t.asDiagonal() * jsa.amplitude;
  else
    out.filtered.amplitude = jsa.amplitude * t.asDiagonal();
  const double before = jsa.amplitude.squaredNorm();
  const double after = out.filtered.amplitude.squaredNorm();
  out.transmission = before > 0.0 ? after / before : 0.0;
  if (!(out.transmission > 0.0))
    throw ConfigError("filter has zero transmission over the grid");
  out.filtered.normalize();
  return out;
}

std::vector<MarginalSample> marginal_spectrum(const JointSpectralAmplitude& jsa, Arm which) {
  const Eigen::MatrixXd I = jsa.intensity();
  const Eigen::VectorXd m =
      which == Arm::Signal ? Eigen::VectorXd(I.rowwise().sum()) : Eigen::VectorXd(I.colwise().sum().transpose());
  const double total = m.sum();
  const auto& axis = jsa.grid.axis(which);
  std::vector<MarginalSample> out(axis.size());
  for (int j = 0; j < axis.size(); ++j)
    out[j] = {axis.omega(j), axis.wavelength_nm(j), total > 0 ? m[j] / total : 0.0};
  return out;
}

double LobeMoments::correlation() const {
  const double d = std::sqrt(var_signal * var_idler);
  return d > 0 ? covariance / d : 0.0;
}

LobeMoments central_lobe_moments(const JointSpectralAmplitude& jsa, const WaveguideSpec& spec) {
  const auto& ws = jsa.grid.signal.omega();
  const auto& wi = jsa.grid.idler.omega();
  const Eigen::MatrixXd dk = phasematch::delta_k_grid(ws, wi, spec);
  const double half_l = spec.length_um() / 2;
  double w = 0, ms = 0, mi = 0;
  for (int k = 0; k < jsa.grid.idler.size(); ++k)
    for (int j = 0; j < jsa.grid.signal.size(); ++j) {
      if (std::abs(dk(j, k) * half_l) >= std::numbers::pi) continue;
      const double p = std::norm(jsa.amplitude(j, k));
      w += p;
      ms += p * ws[j];
      mi += p * wi[k];
    }
  if (!(w > 0.0)) throw NumericalError("central phasematching lobe lies outside the grid");
  ms /= w;
  mi /= w;
  double vs = 0, vi = 0, c = 0;
  for (int k = 0; k < jsa.grid.idler.size(); ++k)
    for (int j = 0; j < jsa.grid.signal.size(); ++j) {
      if (std::abs(dk(j, k) * half_l) >= std::numbers::pi) continue;
      const double p = std::norm(jsa.amplitude(j, k));
      const double ds = ws[j] - ms, di = wi[k] - mi;
      vs += p * ds * ds;
      vi += p * di * di;
      c += p * ds * di;
    }
  return {ms, mi, vs / w, vi / w, c / w};
}

std::vector<ContourPoint> fwhm_contours(const SpectralGrid& grid, const PumpSpec& pump,
                                        const WaveguideSpec& spec) {
  std::vector<ContourPoint> out;
  const auto& ws = grid.signal.omega();
  const auto& wi = grid.idler.omega();
  const double lo = wi.front(), hi = wi.back();
  const double half = std::sqrt(2.0) * pump.intensity_fwhm_omega() / 2;
  const double sum0 = 2.0 * pump.center_omega();
  for (double sign : {-1.0, 1.0})
    for (double s : ws) {
      const double i = sum0 + sign * half - s;
      if (i >= lo && i <= hi)
        out.push_back({"pump_fwhm", units::nm_from_omega(s), units::nm_from_omega(i)});
    }
  const double target = 2.0 * kSincHalfPower / spec.length_um();
  for (double sign : {-1.0, 1.0})
    for (double s : ws) {
      auto g = [&](double i) { return phasematch::delta_k(s, i, spec) - sign * target; };
      double a = lo, ga = g(a);
      constexpr int kScan = 64;
      for (int n = 1; n <= kScan; ++n) {
        const double b = lo + (hi - lo) * n / kScan;
        const double gb = g(b);
        if ((ga < 0) != (gb < 0)) {
          double x0 = a, x1 = b, g0 = ga;
          for (int it = 0; it < 60; ++it) {
            const double m = 0.5 * (x0 + x1);
            const double gm = g(m);
            if ((gm < 0) == (g0 < 0)) {
              x0 = m;
              g0 = gm;
            } else {
              x1 = m;
            }
          }
          out.push_back({"phasematch_fwhm", units::nm_from_omega(s),
                         units::nm_from_omega(0.5 * (x0 + x1))});
        }
        a = b;
        ga = gb;
      }
    }
  return out;
}

}  // namespace sfwm::jsa
