#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sfwm/dispersion.hpp"

namespace sfwm::phasematch {

struct Uniform {};

// dn(z) = dn0 + delta * z / L
struct LinearGradient {
  double delta = 0.0;
};

// Piecewise-constant birefringence: segment j carries dn0 + delta * x_j, with
// x_j standard-normal draws truncated at +-4 and fixed by the seed.
class RandomSegments {
 public:
  static constexpr int kDefaultSegments = 400;

  RandomSegments(double delta, int segment_count = kDefaultSegments, std::uint64_t seed = 1);

  double delta() const { return delta_; }
  int segment_count() const { return static_cast<int>(unit_draws_.size()); }
  std::uint64_t seed() const { return seed_; }
  double offset(int segment) const { return delta_ * unit_draws_[segment]; }
  std::span<const double> unit_draws() const { return unit_draws_; }

 private:
  double delta_;
  std::uint64_t seed_;
  std::vector<double> unit_draws_;
};

using BirefringenceProfile = std::variant<Uniform, LinearGradient, RandomSegments>;

// How the z-dependent mismatch enters the phase of the longitudinal integral.
//   Local:       phase(z) = z * dk(z)
//   Accumulated: phase(z) = integral_0^z dk(z') dz'
// The two coincide for a uniform guide.
enum class PhaseConvention { Local, Accumulated };

struct WaveguideSpec {
  double length_cm = 4.0;
  double birefringence = 1e-4;  // nominal dn0
  BirefringenceProfile profile = Uniform{};
  PhaseConvention phase = PhaseConvention::Local;
  dispersion::SellmeierModel material = dispersion::SellmeierModel::fused_silica();

  void validate() const;
  double length_um() const;
  bool is_uniform() const { return std::holds_alternative<Uniform>(profile); }
  // Realised dn at position z (um) along the guide.
  double birefringence_at(double z_um) const;
};

// dk = 2 k_slow(wp) - k_fast(ws) - k_fast(wi), wp = (ws + wi) / 2. Frequencies in
// rad/ps, result in rad/um.
double delta_k(double omega_s, double omega_i, double birefringence,
               const dispersion::SellmeierModel& material);
inline double delta_k(double omega_s, double omega_i, const WaveguideSpec& spec) {
  return delta_k(omega_s, omega_i, spec.birefringence, spec.material);
}

// Idler wavelength fixed by energy conservation: 1/li = 2/lp - 1/ls.
double energy_conjugate(double pump_nm, double signal_nm);

struct PhasematchSolution {
  double signal_nm;
  double idler_nm;
};

// Non-degenerate root of dk(ws, 2wp - ws) = 0 with ls < lp < li.
// Throws NoPhasematchError when no sign change exists on the search bracket.
PhasematchSolution solve_phasematch(double pump_nm, const WaveguideSpec& spec);

// exp(i dk L/2) sinc(dk L/2) at the nominal birefringence.
std::complex<double> phi_uniform(double omega_s, double omega_i, const WaveguideSpec& spec);

// (1/L) int_0^L exp(i phase(z)) dz for the guide's profile and phase convention.
// Subdivision is doubled until successive results agree to kQuadratureTolerance.
std::complex<double> phi_inhomogeneous(double omega_s, double omega_i, const WaveguideSpec& spec);

inline constexpr double kQuadratureTolerance = 1e-6;

// Phasematching function on the tensor grid omega_s x omega_i (rows = signal).
// Uniform profiles use the closed form; others go through the same quadrature
// as phi_inhomogeneous, with the subdivision fixed by step-halving at probe points.
Eigen::MatrixXcd phasematching_grid(std::span<const double> omega_s,
                                    std::span<const double> omega_i, const WaveguideSpec& spec,
                                    int threads = 1);

// dk at the nominal birefringence on the tensor grid.
Eigen::MatrixXd delta_k_grid(std::span<const double> omega_s, std::span<const double> omega_i,
                             const WaveguideSpec& spec);

}  // namespace sfwm::phasematch
