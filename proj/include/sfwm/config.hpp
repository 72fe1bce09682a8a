#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfwm/counting.hpp"
#include "sfwm/phasematch.hpp"
#include "sfwm/pump_jsa.hpp"

namespace sfwm::config {

using Json = nlohmann::ordered_json;

// Commands and the sweep parameter each one requires (empty for jsa).
struct CommandInfo {
  std::string name;
  std::string sweep_parameter;
};
const std::vector<CommandInfo>& commands();
const CommandInfo& command_info(const std::string& name);

// Physical defaults of the reference source; every block except sweep,
// filter, detector, noise and source.
Json builtin_defaults();

// Reference-experiment scenario for a command: detector, noise calibration, source scaling,
// and the command's sweep range.
Json preset(const std::string& name, const std::string& command);

// Recursive object merge; scalars and arrays in `overlay` replace those in `base`.
void merge_into(Json& base, const Json& overlay);

// Rejects unknown blocks or keys and wrongly typed values.
void validate_schema(const Json& doc);

Json load_file(const std::string& path);

struct GridSettings {
  int points = 512;
  double signal_span_nm = 20.0;
  double idler_span_nm = 28.0;
  bool auto_span = false;
};

struct SweepSpec {
  std::string parameter;
  double start = 0;
  double stop = 0;
  int steps = 1;
  std::vector<double> values() const;
};

struct NoiseSettings {
  double raman_signal_per_mw = 0.0;
  std::optional<double> raman_idler_per_mw;  // empty = calibrate
  double calibration_power_mw = 25.0;
  double calibration_target_g2h = 0.0092;
};

struct SourceSettings {
  double mu_ref = 0.00969;
  double power_ref_mw = 150.0;
  std::string modes = "jsa";  // "jsa", "single", or a mode count for equal weights
};

struct CountingSettings {
  std::uint64_t pulses = 10'000'000;
  std::uint64_t block_size = counting::kDefaultBlockSize;
  bool correlations = false;
};

// Typed view of a merged, validated configuration document.
struct RunConfig {
  Json document;
  std::uint64_t seed = 1;
  int threads = 1;
  phasematch::WaveguideSpec waveguide;
  int ensemble = 50;
  jsa::PumpSpec pump;
  GridSettings grid;
  std::optional<Json> filter;
  std::optional<counting::DetectorModel> detector;
  std::optional<NoiseSettings> noise;
  std::optional<SourceSettings> source;
  std::optional<SweepSpec> sweep;
  CountingSettings counting;

  // Filter block resolved against the phasematched centre wavelengths.
  std::optional<jsa::SpectralFilter> spectral_filter(double signal_nm, double idler_nm) const;
  // Waveguide with the given profile, keeping length, birefringence, material and phase.
  phasematch::WaveguideSpec waveguide_with(phasematch::BirefringenceProfile profile) const;
};

// built-ins < preset < config file < explicit overrides, then schema check and typing.
RunConfig resolve(const std::string& command, const Json& file_config,
                  const std::optional<std::string>& preset_name,
                  const std::optional<std::uint64_t>& seed_override,
                  const std::optional<int>& threads_override);

RunConfig from_document(const std::string& command, Json document);

}  // namespace sfwm::config
