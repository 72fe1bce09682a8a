#include "sfwm/phasematch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "sfwm/errors.hpp"
#include "sfwm/parallel.hpp"
#include "sfwm/units.hpp"

namespace sfwm::phasematch {

using dispersion::Axis;
using cplx = std::complex<double>;

RandomSegments::RandomSegments(double delta, int segment_count, std::uint64_t seed)
    : delta_(delta), seed_(seed) {
  if (segment_count < 1) throw ConfigError("random birefringence profile needs at least one segment");
  if (!(delta >= 0.0)) throw ConfigError("random birefringence spread must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  unit_draws_.reserve(segment_count);
  while (static_cast<int>(unit_draws_.size()) < segment_count) {
    const double x = normal(rng);
    if (std::abs(x) <= 4.0) unit_draws_.push_back(x);
  }
}

void WaveguideSpec::validate() const {
  if (!(length_cm > 0.0)) throw ConfigError("waveguide length must be positive");
  if (!(birefringence > 0.0)) throw ConfigError("nominal birefringence must be positive");
  if (const auto* lin = std::get_if<LinearGradient>(&profile); lin && !std::isfinite(lin->delta))
    throw ConfigError("linear birefringence gradient must be finite");
}

double WaveguideSpec::length_um() const { return units::um_from_cm(length_cm); }

double WaveguideSpec::birefringence_at(double z_um) const {
  const double L = length_um();
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Uniform>) {
          return birefringence;
        } else if constexpr (std::is_same_v<P, LinearGradient>) {
          return birefringence + p.delta * z_um / L;
        } else {
          const int n = p.segment_count();
          const int j = std::clamp(static_cast<int>(std::floor(z_um / L * n)), 0, n - 1);
          return birefringence + p.offset(j);
        }
      },
      profile);
}

double delta_k(double omega_s, double omega_i, double birefringence,
               const dispersion::SellmeierModel& material) {
  const dispersion::Medium medium(material, birefringence);
  const double omega_p = 0.5 * (omega_s + omega_i);
  return 2.0 * medium.wavevector_at(omega_p, Axis::Slow) - medium.wavevector_at(omega_s, Axis::Fast) -
         medium.wavevector_at(omega_i, Axis::Fast);
}

double energy_conjugate(double pump_nm, double signal_nm) {
  const double inv = 2.0 / pump_nm - 1.0 / signal_nm;
  if (!(inv > 0.0) || !(pump_nm > 0.0) || !(signal_nm > 0.0)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "no positive idler wavelength conjugate to pump %.6g nm, signal %.6g nm",
                  pump_nm, signal_nm);
    throw DomainError(buf);
  }
  return 1.0 / inv;
}

PhasematchSolution solve_phasematch(double pump_nm, const WaveguideSpec& spec) {
  spec.validate();
  spec.material.require_in_range(pump_nm);
  const double wp = units::omega_from_nm(pump_nm);
  const double L = spec.length_um();
  // Signal must stay above min_nm and the conjugate idler below max_nm.
  const double ws_max = std::min(units::omega_from_nm(spec.material.min_nm),
                                 2.0 * wp - units::omega_from_nm(spec.material.max_nm));
  const double ws_min = wp * (1.0 + 1e-9);
  auto mismatch = [&](double ws) { return delta_k(ws, 2.0 * wp - ws, spec); };

  char buf[200];
  if (!(ws_max > ws_min)) {
    std::snprintf(buf, sizeof buf, "no phasematch for pump %.6g nm: no non-degenerate room in model range",
                  pump_nm);
    throw NoPhasematchError(buf);
  }
  constexpr int kScan = 4000;
  double lo = ws_min;
  double f_lo = mismatch(lo);
  double hi = lo;
  bool bracketed = false;
  for (int n = 1; n <= kScan; ++n) {
    const double w = ws_min + (ws_max - ws_min) * n / kScan;
    const double f = mismatch(w);
    if ((f < 0.0) != (f_lo < 0.0)) {
      hi = w;
      bracketed = true;
      break;
    }
    lo = w;
    f_lo = f;
  }
  if (!bracketed) {
    std::snprintf(buf, sizeof buf, "no phasematch for pump %.6g nm with birefringence %.3g", pump_nm,
                  spec.birefringence);
    throw NoPhasematchError(buf);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = mismatch(mid);
    if ((f < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
    }
  }
  const double ws = 0.5 * (lo + hi);
  if (!(std::abs(mismatch(ws)) * L < 1e-6))
    throw NumericalError("phasematch bisection did not reach |dk| L < 1e-6");
  const double signal_nm = units::nm_from_omega(ws);
  return {signal_nm, energy_conjugate(pump_nm, signal_nm)};
}

namespace {

// sinc(x) e^{ix}; series near zero.
cplx sinc_phase(double x) {
  const double s = std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
  return std::polar(s, x);
}

// Phase along the guide is dk0 * z + B * G(z), where B = (ws + wi)/c is the
// sensitivity of dk to dn and G is piecewise linear: on interval j,
// G(z) = start[j] + slope[j] * (z - z_j). G carries units of dn * um.
struct PhaseSchedule {
  double step = 0.0;
  std::vector<double> start;
  std::vector<double> slope;
};

constexpr int kLinearBaseIntervals = 64;
constexpr int kMaxIntervals = 1 << 16;

PhaseSchedule make_schedule(const WaveguideSpec& spec, int subdivision) {
  const double L = spec.length_um();
  const bool local = spec.phase == PhaseConvention::Local;
  PhaseSchedule s;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Uniform>) {
          s.step = L;
          s.start = {0.0};
          s.slope = {0.0};
        } else if constexpr (std::is_same_v<P, LinearGradient>) {
          const int n = kLinearBaseIntervals * subdivision;
          s.step = L / n;
          // G(z) = c z^2 with c = delta/L (local) or delta/(2L) (accumulated); chord per interval.
          const double c = (local ? 1.0 : 0.5) * p.delta / L;
          s.start.resize(n);
          s.slope.resize(n);
          for (int j = 0; j < n; ++j) {
            const double za = j * s.step;
            const double zb = za + s.step;
            s.start[j] = c * za * za;
            s.slope[j] = c * (zb * zb - za * za) / s.step;
          }
        } else {
          const int segs = p.segment_count();
          const int n = segs * subdivision;
          s.step = L / n;
          s.start.resize(n);
          s.slope.resize(n);
          double accumulated = 0.0;
          for (int j = 0; j < n; ++j) {
            const double e = p.offset(j / subdivision);
            const double za = j * s.step;
            s.start[j] = local ? za * e : accumulated;
            s.slope[j] = e;
            accumulated += e * s.step;
          }
        }
      },
      spec.profile);
  return s;
}

// Integrates exp(i phase) over the guide for rows [row_begin, row_end) of the grid.
// Real and imaginary parts are kept in separate arrays so the column loop vectorizes.
void integrate_rows(std::span<const double> omega_s, std::span<const double> omega_i,
                    const Eigen::MatrixXd& dk0, const PhaseSchedule& sch, double L,
                    Eigen::MatrixXcd& out, std::size_t row_begin, std::size_t row_end) {
  const std::size_t rows = row_end - row_begin;
  const std::size_t cols = omega_i.size();
  if (rows == 0) return;
  const double h = sch.step;
  const double inv_c = 1.0 / units::kSpeedOfLight;
  const std::size_t n = rows * cols;

  std::vector<double> base(n), sens(n), s0r(n), s0i(n), pr(n, 1.0), pi(n, 0.0), ar(n, 0.0), ai(n, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t p = r * cols + c;
      base[p] = dk0(row_begin + r, c);
      sens[p] = (omega_s[row_begin + r] + omega_i[c]) * inv_c;
      s0r[p] = std::cos(base[p] * h);
      s0i[p] = std::sin(base[p] * h);
    }

  std::vector<double> ssr(rows), ssi(rows), tsr(rows), tsi(rows), sir(cols), sii(cols), tir(cols), tii(cols);
  for (std::size_t j = 0; j < sch.start.size(); ++j) {
    const double g0 = sch.start[j];
    const double g1 = sch.slope[j];
    for (std::size_t r = 0; r < rows; ++r) {
      const double w = omega_s[row_begin + r] * inv_c;
      ssr[r] = std::cos(w * g0), ssi[r] = std::sin(w * g0);
      tsr[r] = std::cos(w * g1 * h), tsi[r] = std::sin(w * g1 * h);
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const double w = omega_i[c] * inv_c;
      sir[c] = std::cos(w * g0), sii[c] = std::sin(w * g0);
      tir[c] = std::cos(w * g1 * h), tii[c] = std::sin(w * g1 * h);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const double xr = ssr[r], xi = ssi[r], yr = tsr[r], yi = tsi[r];
      double* __restrict Pr = pr.data() + r * cols;
      double* __restrict Pi = pi.data() + r * cols;
      double* __restrict Ar = ar.data() + r * cols;
      double* __restrict Ai = ai.data() + r * cols;
      const double* __restrict B = base.data() + r * cols;
      const double* __restrict S = sens.data() + r * cols;
      const double* __restrict Er = s0r.data() + r * cols;
      const double* __restrict Ei = s0i.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) {
        const double kappa = B[c] + S[c] * g1;
        const double a = kappa * h;
        // exp(i a) for this interval
        const double ur = yr * tir[c] - yi * tii[c], ui = yr * tii[c] + yi * tir[c];
        const double fr = Er[c] * ur - Ei[c] * ui, fi = Er[c] * ui + Ei[c] * ur;
        // integral of exp(i kappa z) over one interval
        const bool small = std::abs(a) < 1e-4;
        const double inv = 1.0 / (small ? 1.0 : kappa);
        const double wr = small ? h * (1.0 - a * a / 6.0) : fi * inv;
        const double wi = small ? h * (0.5 * a - a * a * a / 24.0) : (1.0 - fr) * inv;
        // phase at the interval start
        const double vr = xr * sir[c] - xi * sii[c], vi = xr * sii[c] + xi * sir[c];
        const double qr = Pr[c] * vr - Pi[c] * vi, qi = Pr[c] * vi + Pi[c] * vr;
        Ar[c] += qr * wr - qi * wi;
        Ai[c] += qr * wi + qi * wr;
        const double nr = Pr[c] * Er[c] - Pi[c] * Ei[c];
        Pi[c] = Pr[c] * Ei[c] + Pi[c] * Er[c];
        Pr[c] = nr;
      }
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(row_begin + r, c) = cplx(ar[r * cols + c], ai[r * cols + c]) / L;
}

cplx integrate_point(double ws, double wi, double dk0, const PhaseSchedule& sch, double L) {
  const double s[1] = {ws};
  const double i[1] = {wi};
  Eigen::MatrixXd d(1, 1);
  d(0, 0) = dk0;
  Eigen::MatrixXcd out(1, 1);
  integrate_rows(s, i, d, sch, L, out, 0, 1);
  return out(0, 0);
}

struct Converged {
  cplx value;
  int subdivision;
};

Converged converge_point(double ws, double wi, double dk0, const WaveguideSpec& spec) {
  const double L = spec.length_um();
  int sub = 1;
  cplx prev = integrate_point(ws, wi, dk0, make_schedule(spec, sub), L);
  while (true) {
    const int next_sub = sub * 2;
    const PhaseSchedule sch = make_schedule(spec, next_sub);
    if (static_cast<int>(sch.start.size()) > kMaxIntervals)
      throw NumericalError("phasematching quadrature did not converge under step halving");
    const cplx next = integrate_point(ws, wi, dk0, sch, L);
    if (std::abs(next - prev) < kQuadratureTolerance) return {prev, sub};
    prev = next;
    sub = next_sub;
  }
}

}  // namespace

std::complex<double> phi_uniform(double omega_s, double omega_i, const WaveguideSpec& spec) {
  const double x = 0.5 * delta_k(omega_s, omega_i, spec) * spec.length_um();
  return sinc_phase(x);
}

std::complex<double> phi_inhomogeneous(double omega_s, double omega_i, const WaveguideSpec& spec) {
  spec.validate();
  const double dk0 = delta_k(omega_s, omega_i, spec);
  return converge_point(omega_s, omega_i, dk0, spec).value;
}

Eigen::MatrixXd delta_k_grid(std::span<const double> omega_s, std::span<const double> omega_i,
                             const WaveguideSpec& spec) {
  const dispersion::Medium medium(spec.material, spec.birefringence);
  std::vector<double> ks(omega_s.size()), ki(omega_i.size());
  for (std::size_t r = 0; r < omega_s.size(); ++r) ks[r] = medium.wavevector_at(omega_s[r], Axis::Fast);
  for (std::size_t c = 0; c < omega_i.size(); ++c) ki[c] = medium.wavevector_at(omega_i[c], Axis::Fast);
  Eigen::MatrixXd dk(omega_s.size(), omega_i.size());
  for (std::size_t r = 0; r < omega_s.size(); ++r)
    for (std::size_t c = 0; c < omega_i.size(); ++c) {
      const double wp = 0.5 * (omega_s[r] + omega_i[c]);
      dk(r, c) = 2.0 * medium.wavevector_at(wp, Axis::Slow) - ks[r] - ki[c];
    }
  return dk;
}

Eigen::MatrixXcd phasematching_grid(std::span<const double> omega_s,
                                    std::span<const double> omega_i, const WaveguideSpec& spec,
                                    int threads) {
  spec.validate();
  const Eigen::MatrixXd dk = delta_k_grid(omega_s, omega_i, spec);
  const double L = spec.length_um();
  Eigen::MatrixXcd out(omega_s.size(), omega_i.size());
  if (spec.is_uniform()) {
    for (Eigen::Index r = 0; r < dk.rows(); ++r)
      for (Eigen::Index c = 0; c < dk.cols(); ++c) out(r, c) = sinc_phase(0.5 * dk(r, c) * L);
    return out;
  }
  // Subdivision error is governed by the curvature of the dn-dependent phase,
  // which is largest at the highest frequencies; probe the corners and centre.
  const std::size_t ns = omega_s.size(), ni = omega_i.size();
  const std::pair<std::size_t, std::size_t> probes[] = {
      {0, 0}, {0, ni - 1}, {ns - 1, 0}, {ns - 1, ni - 1}, {ns / 2, ni / 2}};
  int sub = 1;
  for (const auto& [r, c] : probes)
    sub = std::max(sub, converge_point(omega_s[r], omega_i[c], dk(r, c), spec).subdivision);
  const PhaseSchedule sch = make_schedule(spec, sub);
  parallel_for(ns, threads, [&](std::size_t begin, std::size_t end) {
    integrate_rows(omega_s, omega_i, dk, sch, L, out, begin, end);
  });
  return out;
}

}  // namespace sfwm::phasematch
