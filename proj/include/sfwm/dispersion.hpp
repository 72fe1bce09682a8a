#pragma once

#include <vector>

namespace sfwm::dispersion {

// One resonance of n^2(l) = 1 + sum_i B_i l^2 / (l^2 - C_i), l in um.
struct SellmeierTerm {
  double strength;       // B_i
  double resonance_um2;  // C_i
};

struct SellmeierModel {
  std::vector<SellmeierTerm> terms;
  double min_nm = 600.0;
  double max_nm = 1600.0;

  // Three-term Sellmeier fit for fused silica.
  static SellmeierModel fused_silica();
  // Dispersionless medium with the given index (a single zero-resonance term).
  static SellmeierModel constant_index(double index, double min_nm = 600.0,
                                       double max_nm = 1600.0);

  bool contains(double wavelength_nm) const {
    return wavelength_nm >= min_nm && wavelength_nm <= max_nm;
  }
  // Throws RangeError naming the valid window when outside it.
  void require_in_range(double wavelength_nm) const;
  double base_index(double wavelength_nm) const;
};

enum class Axis { Fast, Slow };

// Base Sellmeier index split symmetrically: Slow gets +dn/2, Fast gets -dn/2.
double refractive_index(double wavelength_nm, Axis axis, const SellmeierModel& model,
                        double birefringence);

// Returns rad/um.
double wavevector(double wavelength_nm, Axis axis, const SellmeierModel& model,
                  double birefringence);

// Returns um/ps. dn/dl by central difference with step relative_step * l.
double group_velocity(double wavelength_nm, Axis axis, const SellmeierModel& model,
                      double birefringence, double relative_step = 1e-4);

// A birefringent medium: a material model with a fixed slow-fast index offset.
class Medium {
 public:
  Medium(SellmeierModel model, double birefringence)
      : model_(std::move(model)), birefringence_(birefringence) {}

  const SellmeierModel& model() const { return model_; }
  double birefringence() const { return birefringence_; }

  double index(double wavelength_nm, Axis axis) const {
    return refractive_index(wavelength_nm, axis, model_, birefringence_);
  }
  double wavevector(double wavelength_nm, Axis axis) const {
    return dispersion::wavevector(wavelength_nm, axis, model_, birefringence_);
  }
  // Same as wavevector() but parametrised by angular frequency in rad/ps.
  double wavevector_at(double omega, Axis axis) const;
  double group_velocity(double wavelength_nm, Axis axis) const {
    return dispersion::group_velocity(wavelength_nm, axis, model_, birefringence_);
  }

 private:
  SellmeierModel model_;
  double birefringence_;
};

}  // namespace sfwm::dispersion
