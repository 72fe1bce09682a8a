#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfwm::counting {

struct DetectorModel {
  double path_signal = 0.8;  // eta_s^path
  double path_idler = 0.8;   // eta_i^path
  double detector = 0.5;     // eta_det
  double dark = 0.0;         // dark click probability per pulse and detector

  void validate() const;
  double total_signal() const { return path_signal * detector; }
  double total_idler() const { return path_idler * detector; }
};

// Mean Poissonian background photons per pulse in each arm.
struct NoiseModel {
  double raman_signal = 0.0;
  double raman_idler = 0.0;

  void validate() const;
};

enum class Topology { CrossCorrelation, IdlerAutocorrelation, SignalAutocorrelation, HeraldedG2 };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& name);

// Detector ports. A port is used only when the topology routes light to it.
enum Port : unsigned { S1 = 0, S2 = 1, I1 = 2, I2 = 3 };
inline constexpr unsigned kPortCount = 4;
inline constexpr unsigned bit(Port p) { return 1u << p; }
unsigned used_ports(Topology t);

// Per-mode mean pair numbers mu_m = mu c_m^2.
struct SqueezingGain {
  std::vector<double> mode_means;

  static SqueezingGain single_mode(double mu);
  static SqueezingGain equal_modes(int modes, double mu);
  static SqueezingGain from_coefficients(const Eigen::VectorXd& coefficients, double mu);
  double total() const;
  // sum mu_m^2 / mu^2, equal to the purity for Schmidt-derived gains
  double purity() const;
};

struct CountingRecord {
  Topology topology = Topology::CrossCorrelation;
  std::uint64_t pulses = 0;
  std::uint64_t seed = 0;
  std::uint64_t block_size = 0;
  // Histogram of per-pulse click patterns; index = bitmask over Port.
  std::array<std::uint64_t, 16> patterns{};

  // Pulses in which every port of the mask clicked.
  std::uint64_t all_clicked(unsigned mask) const;
  // Pulses in which every port of `all` clicked and at least one of `any` did.
  std::uint64_t clicked(unsigned all, unsigned any) const;

  std::uint64_t n(Port p) const { return all_clicked(bit(p)); }
  std::uint64_t n(Port a, Port b) const { return all_clicked(bit(a) | bit(b)); }
  // Signal singles and signal-idler coincidences for the heralding estimator.
  std::uint64_t heralds() const { return n(S1); }
  std::uint64_t heralded_coincidences() const { return clicked(bit(S1), bit(I1) | bit(I2)); }

  CountingRecord& operator+=(const CountingRecord& other);
};

inline constexpr std::uint64_t kDefaultBlockSize = 65536;

struct RunOptions {
  std::uint64_t pulses = 10'000'000;
  std::uint64_t seed = 1;
  std::uint64_t block_size = kDefaultBlockSize;
  int threads = 1;
};

// Draws the click pattern of one pulse (bitmask over Port). Holds
// distribution state, so use one sampler per random stream.
class PulseSampler {
 public:
  PulseSampler(const SqueezingGain& gain, const DetectorModel& det, const NoiseModel& noise,
               Topology topology);

  unsigned operator()(std::mt19937_64& rng);
  // Total pairs over all modes for one pulse.
  std::uint64_t pairs(std::mt19937_64& rng);

 private:
  std::vector<double> log_prefix_;  // sum_{j<m} log(1/(1+mu_j)), size M+1
  std::vector<double> log_ratio_;   // log(mu_m/(1+mu_m))
  double vacuum_probability_;
  DetectorModel det_;
  Topology topology_;
  unsigned used_;
  std::poisson_distribution<std::uint64_t> raman_s_;
  std::poisson_distribution<std::uint64_t> raman_i_;
  bool has_raman_s_;
  bool has_raman_i_;
};

// Monte Carlo over options.pulses pulses. Blocks of block_size pulses get
// independent streams seeded from (seed, block index), so the record does not
// depend on the thread count.
CountingRecord run_experiment(const SqueezingGain& gain, const DetectorModel& det,
                              const NoiseModel& noise, Topology topology,
                              const RunOptions& options);

// Exact per-pulse probability that every port in `mask` clicks.
double analytic_all_click(const SqueezingGain& gain, const DetectorModel& det,
                          const NoiseModel& noise, Topology topology, unsigned mask);

struct Estimate {
  double value;
  double std_error;
};

// N_xy N_p / (N_x N_y), Poisson error propagation.
Estimate g2_pulsed(const CountingRecord& record, Port x, Port y);
// N_{i1 i2 s} N_s / (N_{i1 s} N_{i2 s}); record must come from HeraldedG2.
Estimate heralded_g2(const CountingRecord& record);
// N_si / N_s, binomial error.
Estimate heralding_efficiency(const CountingRecord& record);

struct PreparationEfficiency {
  double value;
  bool inconsistent;  // value > 1
};
PreparationEfficiency preparation_efficiency(double heralding_efficiency, double detector_efficiency);

// Expected estimator values from analytic_all_click (no sampling noise).
double analytic_g2(const SqueezingGain& gain, const DetectorModel& det, const NoiseModel& noise,
                   Topology topology, Port x, Port y);
double analytic_heralded_g2(const SqueezingGain& gain, const DetectorModel& det,
                            const NoiseModel& noise);
double analytic_heralding_efficiency(const SqueezingGain& gain, const DetectorModel& det,
                                     const NoiseModel& noise);

// Pump power knob: mu grows quadratically, Raman backgrounds linearly.
struct PowerScaling {
  double mu_ref = 0.00969;
  double power_ref_mw = 150.0;
  double raman_signal_per_mw = 0.0;
  double raman_idler_per_mw = 0.0;

  double mu(double power_mw) const;
  NoiseModel noise(double power_mw) const;
};

// Raman idler coefficient (per mW) making analytic_heralded_g2 equal `target`
// at `power_mw`, by bisection. Throws NumericalError if the target lies below
// the noise-free value.
double calibrate_raman_idler(const Eigen::VectorXd& coefficients, const DetectorModel& det,
                             PowerScaling scaling, double power_mw, double target);

// Mean pairs reproducing an analytic g2_si (CrossCorrelation, no noise) by bisection in log mu.
double fit_mu_to_cross_g2(const SqueezingGain& shape, const DetectorModel& det, double target_g2);

// Weighted or unweighted least squares for y = sum_k beta_k x^k.
struct PolyFit {
  std::vector<double> beta;
  double r_squared;
  double predict(double x) const;
};
PolyFit polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree,
                const std::vector<double>& weights = {});

}  // namespace sfwm::counting
