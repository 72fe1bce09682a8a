#include "sfwm/dispersion.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "sfwm/errors.hpp"
#include "sfwm/units.hpp"

namespace sfwm::dispersion {

SellmeierModel SellmeierModel::fused_silica() {
  SellmeierModel m;
  m.terms = {{0.6961663, 0.0684043 * 0.0684043},
             {0.4079426, 0.1162414 * 0.1162414},
             {0.8974794, 9.896161 * 9.896161}};
  return m;
}

SellmeierModel SellmeierModel::constant_index(double index, double min_nm, double max_nm) {
  SellmeierModel m;
  m.terms = {{index * index - 1.0, 0.0}};
  m.min_nm = min_nm;
  m.max_nm = max_nm;
  return m;
}

void SellmeierModel::require_in_range(double wavelength_nm) const {
  if (!contains(wavelength_nm)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "wavelength %.6g nm outside dispersion model range [%.6g, %.6g] nm",
                  wavelength_nm, min_nm, max_nm);
    throw RangeError(buf);
  }
}

double SellmeierModel::base_index(double wavelength_nm) const {
  require_in_range(wavelength_nm);
  const double l2 = (wavelength_nm * 1e-3) * (wavelength_nm * 1e-3);
  double n2 = 1.0;
  for (const auto& t : terms) n2 += t.strength * l2 / (l2 - t.resonance_um2);
  return std::sqrt(n2);
}

double refractive_index(double wavelength_nm, Axis axis, const SellmeierModel& model,
                        double birefringence) {
  const double half = 0.5 * birefringence;
  return model.base_index(wavelength_nm) + (axis == Axis::Slow ? half : -half);
}

double wavevector(double wavelength_nm, Axis axis, const SellmeierModel& model,
                  double birefringence) {
  return units::kTwoPi * refractive_index(wavelength_nm, axis, model, birefringence) /
         (wavelength_nm * 1e-3);
}

double group_velocity(double wavelength_nm, Axis axis, const SellmeierModel& model,
                      double birefringence, double relative_step) {
  const double h = relative_step * wavelength_nm;
  if (!model.contains(wavelength_nm - h) || !model.contains(wavelength_nm + h)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "group velocity stencil at %.6g nm leaves dispersion model range [%.6g, %.6g] nm",
                  wavelength_nm, model.min_nm, model.max_nm);
    throw RangeError(buf);
  }
  const double n = refractive_index(wavelength_nm, axis, model, birefringence);
  // The axis offset is wavelength independent, so the base index suffices here.
  const double dn_dl = (model.base_index(wavelength_nm + h) - model.base_index(wavelength_nm - h)) /
                       (2.0 * h);
  return units::kSpeedOfLight / (n - wavelength_nm * dn_dl);
}

double Medium::wavevector_at(double omega, Axis axis) const {
  return omega * index(units::nm_from_omega(omega), axis) / units::kSpeedOfLight;
}

}  // namespace sfwm::dispersion
