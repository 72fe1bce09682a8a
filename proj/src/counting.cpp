#include "sfwm/counting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "sfwm/errors.hpp"
#include "sfwm/parallel.hpp"

namespace sfwm::counting {

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
}

// [0, 1) from the top 53 bits.
inline double canonical(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

bool splits_signal(Topology t) { return t == Topology::SignalAutocorrelation; }
bool splits_idler(Topology t) {
  return t == Topology::IdlerAutocorrelation || t == Topology::HeraldedG2;
}

}  // namespace

void DetectorModel::validate() const {
  require_probability(path_signal, "signal path efficiency");
  require_probability(path_idler, "idler path efficiency");
  require_probability(detector, "detector efficiency");
  require_probability(dark, "dark click probability");
}

void NoiseModel::validate() const {
  if (!(raman_signal >= 0.0) || !(raman_idler >= 0.0))
    throw ConfigError("Raman background means must be non-negative");
}

std::string to_string(Topology t) {
  switch (t) {
    case Topology::CrossCorrelation: return "cross_correlation";
    case Topology::IdlerAutocorrelation: return "idler_autocorrelation";
    case Topology::SignalAutocorrelation: return "signal_autocorrelation";
    case Topology::HeraldedG2: return "heralded_g2";
  }
  return "unknown";
}

Topology topology_from_string(const std::string& name) {
  for (auto t : {Topology::CrossCorrelation, Topology::IdlerAutocorrelation,
                 Topology::SignalAutocorrelation, Topology::HeraldedG2})
    if (to_string(t) == name) return t;
  throw ConfigError("unknown topology '" + name + "'");
}

unsigned used_ports(Topology t) {
  switch (t) {
    case Topology::CrossCorrelation: return bit(S1) | bit(I1);
    case Topology::IdlerAutocorrelation: return bit(I1) | bit(I2);
    case Topology::SignalAutocorrelation: return bit(S1) | bit(S2);
    case Topology::HeraldedG2: return bit(S1) | bit(I1) | bit(I2);
  }
  return 0;
}

SqueezingGain SqueezingGain::single_mode(double mu) { return {{mu}}; }

SqueezingGain SqueezingGain::equal_modes(int modes, double mu) {
  if (modes < 1) throw DomainError("need at least one mode");
  return {std::vector<double>(modes, mu / modes)};
}

SqueezingGain SqueezingGain::from_coefficients(const Eigen::VectorXd& c, double mu) {
  const double norm = c.squaredNorm();
  if (!(norm > 0.0)) throw DomainError("Schmidt coefficients are all zero");
  SqueezingGain g;
  for (Eigen::Index m = 0; m < c.size(); ++m) g.mode_means.push_back(mu * c[m] * c[m] / norm);
  return g;
}

double SqueezingGain::total() const {
  double s = 0;
  for (double m : mode_means) s += m;
  return s;
}

double SqueezingGain::purity() const {
  const double t = total();
  if (!(t > 0.0)) return 1.0;
  double s = 0;
  for (double m : mode_means) s += m * m;
  return s / (t * t);
}

std::uint64_t CountingRecord::all_clicked(unsigned mask) const {
  std::uint64_t n = 0;
  for (unsigned p = 0; p < patterns.size(); ++p)
    if ((p & mask) == mask) n += patterns[p];
  return n;
}

std::uint64_t CountingRecord::clicked(unsigned all, unsigned any) const {
  std::uint64_t n = 0;
  for (unsigned p = 0; p < patterns.size(); ++p)
    if ((p & all) == all && (p & any) != 0) n += patterns[p];
  return n;
}

CountingRecord& CountingRecord::operator+=(const CountingRecord& other) {
  pulses += other.pulses;
  for (std::size_t p = 0; p < patterns.size(); ++p) patterns[p] += other.patterns[p];
  return *this;
}

PulseSampler::PulseSampler(const SqueezingGain& gain, const DetectorModel& det,
                           const NoiseModel& noise, Topology topology)
    : det_(det),
      topology_(topology),
      used_(used_ports(topology)),
      raman_s_(noise.raman_signal > 0 ? noise.raman_signal : 1.0),
      raman_i_(noise.raman_idler > 0 ? noise.raman_idler : 1.0),
      has_raman_s_(noise.raman_signal > 0),
      has_raman_i_(noise.raman_idler > 0) {
  det.validate();
  noise.validate();
  log_prefix_.assign(1, 0.0);
  for (double mu : gain.mode_means) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("mode mean pair numbers must be >= 0");
    log_prefix_.push_back(log_prefix_.back() - std::log1p(mu));
    log_ratio_.push_back(std::log(mu) - std::log1p(mu));
  }
  vacuum_probability_ = std::exp(log_prefix_.back());
}

std::uint64_t PulseSampler::pairs(std::mt19937_64& rng) {
  // Locate the first mode with n_m > 0 through the cumulative vacuum
  // probabilities, draw its conditional geometric count, then repeat on the
  // remaining modes.
  const std::size_t modes = log_ratio_.size();
  double u = canonical(rng);
  if (u < vacuum_probability_) return 0;
  std::uint64_t total = 0;
  std::size_t start = 0;
  double t = std::log(u);  // threshold on log_prefix_ relative to log_prefix_[start]
  const double end = log_prefix_.back();
  while (true) {
    const double level = log_prefix_[start] + t;
    if (level < end) break;
    // first j in (start, modes] with log_prefix_[j] <= level
    auto it = std::partition_point(log_prefix_.begin() + start + 1, log_prefix_.end(),
                                   [level](double v) { return v > level; });
    const std::size_t m = static_cast<std::size_t>(it - log_prefix_.begin()) - 1;
    const double v = 1.0 - canonical(rng);
    total += 1 + static_cast<std::uint64_t>(std::floor(std::log(v) / log_ratio_[m]));
    start = m + 1;
    if (start >= modes) break;
    t = std::log(1.0 - canonical(rng));
  }
  return total;
}

unsigned PulseSampler::operator()(std::mt19937_64& rng) {
  const std::uint64_t n = pairs(rng);
  unsigned clicks = 0;
  const bool signal_used = used_ & (bit(S1) | bit(S2));
  const bool idler_used = used_ & (bit(I1) | bit(I2));
  if (signal_used) {
    const std::uint64_t ns = n + (has_raman_s_ ? raman_s_(rng) : 0);
    const double p = det_.total_signal();
    const bool split = splits_signal(topology_);
    for (std::uint64_t k = 0; k < ns; ++k)
      if (canonical(rng) < p) clicks |= (split && canonical(rng) < 0.5) ? bit(S2) : bit(S1);
  }
  if (idler_used) {
    const std::uint64_t ni = n + (has_raman_i_ ? raman_i_(rng) : 0);
    const double p = det_.total_idler();
    const bool split = splits_idler(topology_);
    for (std::uint64_t k = 0; k < ni; ++k)
      if (canonical(rng) < p) clicks |= (split && canonical(rng) < 0.5) ? bit(I2) : bit(I1);
  }
  if (det_.dark > 0.0)
    for (unsigned port = 0; port < kPortCount; ++port)
      if ((used_ & (1u << port)) && canonical(rng) < det_.dark) clicks |= 1u << port;
  return clicks;
}

CountingRecord run_experiment(const SqueezingGain& gain, const DetectorModel& det,
                              const NoiseModel& noise, Topology topology,
                              const RunOptions& options) {
  if (options.pulses < 1) throw ConfigError("pulse count must be at least 1");
  if (options.block_size < 1) throw ConfigError("block size must be at least 1");
  const PulseSampler prototype(gain, det, noise, topology);
  const std::uint64_t blocks = (options.pulses + options.block_size - 1) / options.block_size;
  std::vector<CountingRecord> partial(blocks);
  parallel_for(blocks, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::uint64_t first = b * options.block_size;
      const std::uint64_t count = std::min(options.block_size, options.pulses - first);
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
      std::mt19937_64 rng(seq);
      PulseSampler sampler = prototype;
      auto& rec = partial[b];
      for (std::uint64_t k = 0; k < count; ++k) ++rec.patterns[sampler(rng)];
      rec.pulses = count;
    }
  });
  CountingRecord out;
  out.topology = topology;
  out.seed = options.seed;
  out.block_size = options.block_size;
  for (const auto& r : partial) out += r;
  return out;
}

namespace {

// Probability per photon of reaching each port.
std::array<double, kPortCount> landing(const DetectorModel& det, Topology t) {
  const unsigned used = used_ports(t);
  std::array<double, kPortCount> a{};
  const double fs = splits_signal(t) ? 0.5 : 1.0;
  const double fi = splits_idler(t) ? 0.5 : 1.0;
  if (used & bit(S1)) a[S1] = det.total_signal() * fs;
  if (used & bit(S2)) a[S2] = det.total_signal() * fs;
  if (used & bit(I1)) a[I1] = det.total_idler() * fi;
  if (used & bit(I2)) a[I2] = det.total_idler() * fi;
  return a;
}

// P(no port in `set` clicks).
double no_click(const SqueezingGain& gain, const DetectorModel& det, const NoiseModel& noise,
                const std::array<double, kPortCount>& land, unsigned set) {
  double a = 0, b = 0;
  for (Port p : {S1, S2})
    if (set & bit(p)) a += land[p];
  for (Port p : {I1, I2})
    if (set & bit(p)) b += land[p];
  const double x = (1 - a) * (1 - b);
  double v = std::pow(1 - det.dark, std::popcount(set));
  for (double mu : gain.mode_means) v /= 1 + mu * (1 - x);
  return v * std::exp(-noise.raman_signal * a - noise.raman_idler * b);
}

// P(every port in `all` clicks and no port in `none` clicks), by inclusion-exclusion.
double click_pattern(const SqueezingGain& gain, const DetectorModel& det, const NoiseModel& noise,
                     Topology t, unsigned all, unsigned none) {
  const unsigned used = used_ports(t);
  if ((all & ~used) != 0) return 0.0;
  const auto land = landing(det, t);
  double p = 0;
  for (unsigned sub = all;; sub = (sub - 1) & all) {
    const double term = no_click(gain, det, noise, land, sub | none);
    p += (std::popcount(sub) % 2 ? -term : term);
    if (sub == 0) break;
  }
  return p;
}

}  // namespace

double analytic_all_click(const SqueezingGain& gain, const DetectorModel& det,
                          const NoiseModel& noise, Topology topology, unsigned mask) {
  return click_pattern(gain, det, noise, topology, mask, 0);
}

Estimate g2_pulsed(const CountingRecord& r, Port x, Port y) {
  const double nx = static_cast<double>(r.n(x));
  const double ny = static_cast<double>(r.n(y));
  if (nx == 0 || ny == 0)
    throw UndefinedEstimatorError("g2 undefined: zero singles on a detector");
  const double nxy = static_cast<double>(r.n(x, y));
  const double np = static_cast<double>(r.pulses);
  const double value = nxy * np / (nx * ny);
  const double rel = std::sqrt(1.0 / std::max(nxy, 1.0) + 1.0 / nx + 1.0 / ny);
  return {value, (nxy > 0 ? value : np / (nx * ny)) * rel};
}

Estimate heralded_g2(const CountingRecord& r) {
  if (r.topology != Topology::HeraldedG2)
    throw DomainError("heralded g2 needs a record from the heralded_g2 topology");
  const double ns = static_cast<double>(r.n(S1));
  const double n1 = static_cast<double>(r.n(I1, S1));
  const double n2 = static_cast<double>(r.n(I2, S1));
  if (n1 == 0 || n2 == 0)
    throw UndefinedEstimatorError("heralded g2 undefined: no heralded coincidences in an idler arm");
  const double n3 = static_cast<double>(r.all_clicked(bit(S1) | bit(I1) | bit(I2)));
  const double value = n3 * ns / (n1 * n2);
  const double rel = std::sqrt(1.0 / std::max(n3, 1.0) + 1.0 / ns + 1.0 / n1 + 1.0 / n2);
  return {value, (n3 > 0 ? value : ns / (n1 * n2)) * rel};
}

Estimate heralding_efficiency(const CountingRecord& r) {
  const double ns = static_cast<double>(r.heralds());
  if (ns == 0) throw UndefinedEstimatorError("heralding efficiency undefined: no heralds");
  const double eta = static_cast<double>(r.heralded_coincidences()) / ns;
  return {eta, std::sqrt(std::max(eta * (1 - eta), 0.0) / ns)};
}

PreparationEfficiency preparation_efficiency(double eta_h, double eta_det) {
  if (!(eta_det > 0.0 && eta_det <= 1.0))
    throw DomainError("detector efficiency must lie in (0, 1]");
  const double v = eta_h / eta_det;
  return {v, v > 1.0};
}

double analytic_g2(const SqueezingGain& gain, const DetectorModel& det, const NoiseModel& noise,
                   Topology t, Port x, Port y) {
  const double px = analytic_all_click(gain, det, noise, t, bit(x));
  const double py = analytic_all_click(gain, det, noise, t, bit(y));
  if (!(px > 0 && py > 0)) throw UndefinedEstimatorError("g2 undefined: zero click probability");
  return analytic_all_click(gain, det, noise, t, bit(x) | bit(y)) / (px * py);
}

double analytic_heralded_g2(const SqueezingGain& gain, const DetectorModel& det,
                            const NoiseModel& noise) {
  const auto t = Topology::HeraldedG2;
  const double ps = analytic_all_click(gain, det, noise, t, bit(S1));
  const double p1 = analytic_all_click(gain, det, noise, t, bit(S1) | bit(I1));
  const double p2 = analytic_all_click(gain, det, noise, t, bit(S1) | bit(I2));
  if (!(p1 > 0 && p2 > 0)) throw UndefinedEstimatorError("heralded g2 undefined");
  return analytic_all_click(gain, det, noise, t, bit(S1) | bit(I1) | bit(I2)) * ps / (p1 * p2);
}

double analytic_heralding_efficiency(const SqueezingGain& gain, const DetectorModel& det,
                                     const NoiseModel& noise) {
  const auto t = Topology::HeraldedG2;
  const double ps = analytic_all_click(gain, det, noise, t, bit(S1));
  if (!(ps > 0)) throw UndefinedEstimatorError("heralding efficiency undefined");
  const double lone = click_pattern(gain, det, noise, t, bit(S1), bit(I1) | bit(I2));
  return (ps - lone) / ps;
}

double PowerScaling::mu(double power_mw) const {
  return mu_ref * std::pow(power_mw / power_ref_mw, 2);
}

NoiseModel PowerScaling::noise(double power_mw) const {
  return {raman_signal_per_mw * power_mw, raman_idler_per_mw * power_mw};
}

double calibrate_raman_idler(const Eigen::VectorXd& coefficients, const DetectorModel& det,
                             PowerScaling scaling, double power_mw, double target) {
  const auto gain = SqueezingGain::from_coefficients(coefficients, scaling.mu(power_mw));
  auto g2 = [&](double k) {
    scaling.raman_idler_per_mw = k;
    return analytic_heralded_g2(gain, det, scaling.noise(power_mw));
  };
  if (g2(0.0) > target)
    throw NumericalError("heralded g2 target lies below the noise-free value");
  double lo = 0.0, hi = 1e-6;
  while (g2(hi) < target) {
    hi *= 2;
    if (hi > 1.0) throw NumericalError("Raman calibration did not bracket the target");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g2(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double fit_mu_to_cross_g2(const SqueezingGain& shape, const DetectorModel& det,
                          double target_g2) {
  const double total = shape.total();
  if (!(total > 0)) throw DomainError("gain shape must carry positive total");
  auto g2 = [&](double log_mu) {
    SqueezingGain g = shape;
    for (double& m : g.mode_means) m *= std::exp(log_mu) / total;
    return analytic_g2(g, det, NoiseModel{}, Topology::CrossCorrelation, S1, I1);
  };
  double lo = std::log(1e-7), hi = std::log(1.0);
  if (!(g2(lo) > target_g2 && g2(hi) < target_g2))
    throw NumericalError("cross-correlation target outside the reachable range");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g2(mid) > target_g2 ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

double PolyFit::predict(double x) const {
  double y = 0, p = 1;
  for (double b : beta) {
    y += b * p;
    p *= x;
  }
  return y;
}

PolyFit polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree,
                const std::vector<double>& weights) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (y.size() != x.size() || (!weights.empty() && weights.size() != x.size()))
    throw DomainError("polyfit inputs differ in length");
  if (n < degree + 1) throw DomainError("polyfit needs more points than coefficients");
  Eigen::MatrixXd a(n, degree + 1);
  Eigen::VectorXd b(n), w = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!weights.empty()) w[i] = weights[i];
    double p = 1;
    for (int k = 0; k <= degree; ++k) {
      a(i, k) = p;
      p *= x[i];
    }
    b[i] = y[i];
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::VectorXd beta =
      (sw.asDiagonal() * a).colPivHouseholderQr().solve(sw.asDiagonal() * b);
  const Eigen::VectorXd res = b - a * beta;
  const double mean = w.dot(b) / w.sum();
  const double ss_res = (w.array() * res.array().square()).sum();
  const double ss_tot = (w.array() * (b.array() - mean).square()).sum();
  PolyFit fit;
  fit.beta.assign(beta.data(), beta.data() + beta.size());
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace sfwm::counting
