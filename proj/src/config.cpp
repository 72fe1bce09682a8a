#include "sfwm/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "sfwm/errors.hpp"

namespace sfwm::config {

namespace {

// Allowed keys per block; "*" marks a free-form value validated later.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"material", {"sellmeier", "min_nm", "max_nm"}},
      {"waveguide",
       {"length_cm", "birefringence", "profile", "delta_dn", "segments", "seed", "phase",
        "ensemble"}},
      {"pump", {"wavelength_nm", "bandwidth_nm", "mean_pairs"}},
      {"grid", {"points", "signal_span_nm", "idler_span_nm", "auto_span"}},
      {"filter", {"target", "shape", "center_nm", "width_nm", "fwhm_nm"}},
      {"detector", {"path_signal", "path_idler", "efficiency", "dark"}},
      {"noise",
       {"raman_signal_per_mw", "raman_idler_per_mw", "calibration_power_mw",
        "calibration_target_g2h"}},
      {"source", {"mu_ref", "power_ref_mw", "modes"}},
      {"sweep", {"parameter", "start", "stop", "steps"}},
      {"counting", {"pulses", "block_size", "correlations"}},
      {"output", {"amplitude"}},
  };
  return s;
}

const std::set<std::string> kScalarKeys = {"seed", "threads"};

[[noreturn]] void type_error(const std::string& path, const char* expected) {
  throw ConfigError(path + " must be " + expected);
}

double number(const Json& block, const std::string& block_name, const std::string& key) {
  const auto& v = block.at(key);
  if (!v.is_number()) type_error(block_name + "." + key, "a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) type_error(block_name + "." + key, "finite");
  return d;
}

std::int64_t integer(const Json& block, const std::string& block_name, const std::string& key) {
  const auto& v = block.at(key);
  if (!v.is_number_integer()) type_error(block_name + "." + key, "an integer");
  return v.get<std::int64_t>();
}

std::string text(const Json& block, const std::string& block_name, const std::string& key) {
  const auto& v = block.at(key);
  if (!v.is_string()) type_error(block_name + "." + key, "a string");
  return v.get<std::string>();
}

bool boolean(const Json& block, const std::string& block_name, const std::string& key) {
  const auto& v = block.at(key);
  if (!v.is_boolean()) type_error(block_name + "." + key, "true or false");
  return v.get<bool>();
}

const Json& block(const Json& doc, const std::string& name) {
  if (!doc.contains(name)) throw ConfigError("missing required block '" + name + "'");
  return doc.at(name);
}

}  // namespace

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> c = {
      {"phasematch-curve", "pump_wavelength_nm"},
      {"jsa", ""},
      {"sweep-pump-bandwidth", "pump_bandwidth_nm"},
      {"sweep-inhomogeneity", "delta_dn"},
      {"count-sim", "pump_power_mw"},
  };
  return c;
}

const CommandInfo& command_info(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return c;
  throw ConfigError("unknown command '" + name + "'");
}

Json builtin_defaults() {
  Json sellmeier = Json::array();
  for (const auto& t : dispersion::SellmeierModel::fused_silica().terms)
    sellmeier.push_back({{"B", t.strength}, {"C_um2", t.resonance_um2}});
  return {
      {"seed", 1},
      {"threads", 1},
      {"material", {{"sellmeier", sellmeier}, {"min_nm", 600.0}, {"max_nm", 1600.0}}},
      {"waveguide",
       {{"length_cm", 4.0},
        {"birefringence", 1e-4},
        {"profile", "uniform"},
        {"delta_dn", 0.0},
        {"segments", phasematch::RandomSegments::kDefaultSegments},
        {"phase", "local"},
        {"ensemble", 50}}},
      {"pump", {{"wavelength_nm", 729.0}, {"bandwidth_nm", 3.1}, {"mean_pairs", 0.01}}},
      {"grid",
       {{"points", 512}, {"signal_span_nm", 20.0}, {"idler_span_nm", 28.0}, {"auto_span", false}}},
      {"counting",
       {{"pulses", 10'000'000}, {"block_size", counting::kDefaultBlockSize}, {"correlations", false}}},
      {"output", {{"amplitude", false}}},
  };
}

Json preset(const std::string& name, const std::string& command) {
  if (name != "paper") throw ConfigError("unknown preset '" + name + "'");
  command_info(command);
  Json p = Json::object();
  if (command == "phasematch-curve") {
    p["sweep"] = {{"parameter", "pump_wavelength_nm"}, {"start", 700.0}, {"stop", 1100.0},
                  {"steps", 41}};
  } else if (command == "jsa") {
    p["pump"] = {{"bandwidth_nm", 3.1}};
  } else if (command == "sweep-pump-bandwidth") {
    p["sweep"] = {{"parameter", "pump_bandwidth_nm"}, {"start", 0.5}, {"stop", 8.0},
                  {"steps", 31}};
    p["grid"] = {{"auto_span", true}};
    p["filter"] = {{"target", "signal"}, {"shape", "tophat"}, {"width_nm", 4.5}};
  } else if (command == "sweep-inhomogeneity") {
    p["sweep"] = {{"parameter", "delta_dn"}, {"start", 0.0}, {"stop", 6e-6}, {"steps", 13}};
    p["grid"] = {{"points", 256}};
    p["waveguide"] = {{"ensemble", 50}};
  } else if (command == "count-sim") {
    p["sweep"] = {{"parameter", "pump_power_mw"}, {"start", 25.0}, {"stop", 150.0},
                  {"steps", 6}};
    p["detector"] = {{"path_signal", 0.8}, {"path_idler", 0.8}, {"efficiency", 0.5},
                     {"dark", 3e-6}};
    p["noise"] = {{"raman_signal_per_mw", 0.0},
                  {"raman_idler_per_mw", "calibrate"},
                  {"calibration_power_mw", 25.0},
                  {"calibration_target_g2h", 0.0092}};
    p["source"] = {{"mu_ref", 0.00969}, {"power_ref_mw", 150.0}, {"modes", "jsa"}};
  }
  return p;
}

void merge_into(Json& base, const Json& overlay) {
  if (!overlay.is_object()) {
    base = overlay;
    return;
  }
  if (!base.is_object()) base = Json::object();
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void validate_schema(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (kScalarKeys.contains(it.key())) continue;
    const auto found = schema().find(it.key());
    if (found == schema().end()) throw ConfigError("unknown configuration block '" + it.key() + "'");
    if (!it.value().is_object()) throw ConfigError("block '" + it.key() + "' must be an object");
    for (auto kv = it.value().begin(); kv != it.value().end(); ++kv)
      if (!found->second.contains(kv.key()))
        throw ConfigError("unknown key '" + it.key() + "." + kv.key() + "'");
  }
}

Json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<double> SweepSpec::values() const {
  if (steps == 1) return {start};
  std::vector<double> v(steps);
  for (int k = 0; k < steps; ++k) v[k] = start + (stop - start) * k / (steps - 1);
  v.back() = stop;
  return v;
}

std::optional<jsa::SpectralFilter> RunConfig::spectral_filter(double signal_nm,
                                                              double idler_nm) const {
  if (!filter) return std::nullopt;
  const Json& f = *filter;
  jsa::SpectralFilter out;
  const std::string target = f.contains("target") ? text(f, "filter", "target") : "signal";
  if (target == "signal")
    out.target = jsa::Arm::Signal;
  else if (target == "idler")
    out.target = jsa::Arm::Idler;
  else
    throw ConfigError("filter.target must be 'signal' or 'idler'");
  const double center = f.contains("center_nm") ? number(f, "filter", "center_nm")
                        : out.target == jsa::Arm::Signal ? signal_nm
                                                         : idler_nm;
  const std::string shape = f.contains("shape") ? text(f, "filter", "shape") : "tophat";
  if (shape == "tophat") {
    if (!f.contains("width_nm")) throw ConfigError("filter.width_nm is required for a tophat");
    out.shape = jsa::TopHat{center, number(f, "filter", "width_nm")};
  } else if (shape == "gaussian") {
    if (!f.contains("fwhm_nm")) throw ConfigError("filter.fwhm_nm is required for a gaussian");
    out.shape = jsa::GaussianPassband{center, number(f, "filter", "fwhm_nm")};
  } else {
    throw ConfigError("filter.shape must be 'tophat' or 'gaussian'");
  }
  return out;
}

phasematch::WaveguideSpec RunConfig::waveguide_with(phasematch::BirefringenceProfile profile) const {
  phasematch::WaveguideSpec w = waveguide;
  w.profile = std::move(profile);
  return w;
}

RunConfig from_document(const std::string& command, Json doc) {
  validate_schema(doc);
  RunConfig rc;

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0))
      type_error("seed", "a non-negative integer");
    rc.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("threads")) {
    if (!doc["threads"].is_number_integer() || doc["threads"].get<int>() < 1)
      type_error("threads", "a positive integer");
    rc.threads = doc["threads"].get<int>();
  }

  const Json& mat = block(doc, "material");
  dispersion::SellmeierModel model;
  model.terms.clear();
  if (!mat.at("sellmeier").is_array() || mat.at("sellmeier").empty())
    type_error("material.sellmeier", "a non-empty array of {B, C_um2} terms");
  for (const auto& t : mat.at("sellmeier")) {
    if (!t.is_object() || !t.contains("B") || !t.contains("C_um2"))
      type_error("material.sellmeier[]", "an object with B and C_um2");
    model.terms.push_back({number(t, "material.sellmeier[]", "B"),
                           number(t, "material.sellmeier[]", "C_um2")});
  }
  model.min_nm = number(mat, "material", "min_nm");
  model.max_nm = number(mat, "material", "max_nm");
  if (!(model.min_nm > 0 && model.max_nm > model.min_nm))
    throw ConfigError("material range must satisfy 0 < min_nm < max_nm");

  const Json& wg = block(doc, "waveguide");
  rc.waveguide.length_cm = number(wg, "waveguide", "length_cm");
  rc.waveguide.birefringence = number(wg, "waveguide", "birefringence");
  rc.waveguide.material = model;
  const std::string phase = text(wg, "waveguide", "phase");
  if (phase == "local")
    rc.waveguide.phase = phasematch::PhaseConvention::Local;
  else if (phase == "accumulated")
    rc.waveguide.phase = phasematch::PhaseConvention::Accumulated;
  else
    throw ConfigError("waveguide.phase must be 'local' or 'accumulated'");
  const double delta = number(wg, "waveguide", "delta_dn");
  if (delta < 0) throw ConfigError("waveguide.delta_dn must be non-negative");
  const auto segments = integer(wg, "waveguide", "segments");
  if (segments < 1) throw ConfigError("waveguide.segments must be positive");
  const std::uint64_t wseed =
      wg.contains("seed") ? static_cast<std::uint64_t>(integer(wg, "waveguide", "seed")) : rc.seed;
  const std::string profile = text(wg, "waveguide", "profile");
  if (profile == "uniform")
    rc.waveguide.profile = phasematch::Uniform{};
  else if (profile == "linear")
    rc.waveguide.profile = phasematch::LinearGradient{delta};
  else if (profile == "random")
    rc.waveguide.profile = phasematch::RandomSegments(delta, static_cast<int>(segments), wseed);
  else
    throw ConfigError("waveguide.profile must be 'uniform', 'linear' or 'random'");
  rc.ensemble = static_cast<int>(integer(wg, "waveguide", "ensemble"));
  try {
    rc.waveguide.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  const Json& pump = block(doc, "pump");
  rc.pump.wavelength_nm = number(pump, "pump", "wavelength_nm");
  rc.pump.bandwidth_nm = number(pump, "pump", "bandwidth_nm");
  rc.pump.mean_pairs = number(pump, "pump", "mean_pairs");
  rc.pump.validate();

  const Json& grid = block(doc, "grid");
  rc.grid.points = static_cast<int>(integer(grid, "grid", "points"));
  rc.grid.signal_span_nm = number(grid, "grid", "signal_span_nm");
  rc.grid.idler_span_nm = number(grid, "grid", "idler_span_nm");
  rc.grid.auto_span = boolean(grid, "grid", "auto_span");
  if (rc.grid.points < jsa::SpectralAxis::kMinPoints)
    throw ConfigError("grid.points must be at least " + std::to_string(jsa::SpectralAxis::kMinPoints));
  if (!(rc.grid.signal_span_nm > 0 && rc.grid.idler_span_nm > 0))
    throw ConfigError("grid spans must be positive");

  if (doc.contains("filter")) {
    rc.filter = doc["filter"];
    rc.spectral_filter(rc.pump.wavelength_nm, rc.pump.wavelength_nm);  // shape check
  }

  if (doc.contains("detector")) {
    const Json& d = doc["detector"];
    counting::DetectorModel det;
    for (const char* k : {"path_signal", "path_idler", "efficiency", "dark"})
      if (!d.contains(k)) throw ConfigError(std::string("missing detector.") + k);
    det.path_signal = number(d, "detector", "path_signal");
    det.path_idler = number(d, "detector", "path_idler");
    det.detector = number(d, "detector", "efficiency");
    det.dark = number(d, "detector", "dark");
    det.validate();
    rc.detector = det;
  }

  if (doc.contains("noise")) {
    const Json& n = doc["noise"];
    NoiseSettings ns;
    if (n.contains("raman_signal_per_mw")) ns.raman_signal_per_mw = number(n, "noise", "raman_signal_per_mw");
    if (n.contains("raman_idler_per_mw")) {
      if (n["raman_idler_per_mw"].is_string()) {
        if (n["raman_idler_per_mw"] != "calibrate")
          type_error("noise.raman_idler_per_mw", "a number or \"calibrate\"");
      } else {
        ns.raman_idler_per_mw = number(n, "noise", "raman_idler_per_mw");
      }
    } else {
      ns.raman_idler_per_mw = 0.0;
    }
    if (n.contains("calibration_power_mw"))
      ns.calibration_power_mw = number(n, "noise", "calibration_power_mw");
    if (n.contains("calibration_target_g2h"))
      ns.calibration_target_g2h = number(n, "noise", "calibration_target_g2h");
    if (ns.raman_signal_per_mw < 0 || (ns.raman_idler_per_mw && *ns.raman_idler_per_mw < 0))
      throw ConfigError("Raman coefficients must be non-negative");
    rc.noise = ns;
  }

  if (doc.contains("source")) {
    const Json& s = doc["source"];
    SourceSettings ss;
    if (s.contains("mu_ref")) ss.mu_ref = number(s, "source", "mu_ref");
    if (s.contains("power_ref_mw")) ss.power_ref_mw = number(s, "source", "power_ref_mw");
    if (s.contains("modes")) {
      if (s["modes"].is_number_integer()) {
        if (s["modes"].get<int>() < 1) throw ConfigError("source.modes must be positive");
        ss.modes = std::to_string(s["modes"].get<int>());
      } else {
        ss.modes = text(s, "source", "modes");
        if (ss.modes != "jsa" && ss.modes != "single")
          throw ConfigError("source.modes must be 'jsa', 'single' or a positive integer");
      }
    }
    if (!(ss.mu_ref > 0 && ss.power_ref_mw > 0))
      throw ConfigError("source.mu_ref and source.power_ref_mw must be positive");
    rc.source = ss;
  }

  if (doc.contains("sweep")) {
    const Json& s = doc["sweep"];
    for (const char* k : {"parameter", "start", "stop", "steps"})
      if (!s.contains(k)) throw ConfigError(std::string("missing sweep.") + k);
    SweepSpec sw;
    sw.parameter = text(s, "sweep", "parameter");
    sw.start = number(s, "sweep", "start");
    sw.stop = number(s, "sweep", "stop");
    sw.steps = static_cast<int>(integer(s, "sweep", "steps"));
    if (sw.steps < 1) throw ConfigError("sweep.steps must be at least 1");
    rc.sweep = sw;
  }

  const Json& cnt = block(doc, "counting");
  const auto pulses = integer(cnt, "counting", "pulses");
  const auto bs = integer(cnt, "counting", "block_size");
  if (pulses < 1 || bs < 1) throw ConfigError("counting.pulses and counting.block_size must be positive");
  rc.counting.pulses = static_cast<std::uint64_t>(pulses);
  rc.counting.block_size = static_cast<std::uint64_t>(bs);
  rc.counting.correlations = boolean(cnt, "counting", "correlations");

  // command-specific requirements
  const auto& info = command_info(command);
  if (!info.sweep_parameter.empty()) {
    if (!rc.sweep) throw ConfigError("command " + command + " needs a sweep block");
    if (rc.sweep->parameter != info.sweep_parameter)
      throw ConfigError("command " + command + " sweeps '" + info.sweep_parameter + "', not '" +
                        rc.sweep->parameter + "'");
  }
  if (command == "sweep-inhomogeneity") {
    if (rc.ensemble < 20) throw ConfigError("waveguide.ensemble must be at least 20");
    if (rc.sweep->start < 0 || rc.sweep->stop < 0)
      throw ConfigError("delta_dn sweep range must be non-negative");
  }
  if (command == "sweep-pump-bandwidth" && (rc.sweep->start <= 0 || rc.sweep->stop <= 0))
    throw ConfigError("pump bandwidth sweep range must be positive");
  if (command == "count-sim") {
    if (!rc.detector) throw ConfigError("command count-sim needs a detector block");
    if (!rc.noise) throw ConfigError("command count-sim needs a noise block");
    if (!rc.source) throw ConfigError("command count-sim needs a source block");
    if (rc.sweep->start < 0 || rc.sweep->stop < 0)
      throw ConfigError("pump power sweep range must be non-negative");
  }

  // execution detail, kept out of the echo so reports do not depend on it
  doc.erase("threads");
  rc.document = std::move(doc);
  return rc;
}

RunConfig resolve(const std::string& command, const Json& file_config,
                  const std::optional<std::string>& preset_name,
                  const std::optional<std::uint64_t>& seed_override,
                  const std::optional<int>& threads_override) {
  command_info(command);
  Json doc = builtin_defaults();
  if (preset_name) merge_into(doc, preset(*preset_name, command));
  validate_schema(file_config);
  merge_into(doc, file_config);
  if (seed_override) doc["seed"] = *seed_override;
  if (threads_override) doc["threads"] = *threads_override;
  return from_document(command, std::move(doc));
}

}  // namespace sfwm::config
