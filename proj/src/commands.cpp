#include "sfwm/commands.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "sfwm/errors.hpp"
#include "sfwm/output.hpp"
#include "sfwm/parallel.hpp"
#include "sfwm/schmidt.hpp"

namespace sfwm::commands {

namespace {

using config::Json;
using config::RunConfig;
using output::Cell;
using output::CsvTable;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json new_report(const std::string& command) {
  return {{"command", command}, {"status", "ok"}, {"outputs", Json::array()},
          {"results", Json::object()}, {"failed_rows", Json::array()}};
}

void finish(CommandResult& r, const RunConfig& rc) {
  r.report["status"] = r.failed_rows ? "partial" : "ok";
  for (const auto& f : r.files) r.report["outputs"].push_back(f.name);
  r.report["outputs"].push_back(r.command + ".report.json");
  r.report["config"] = rc.document;
}

void fail_row(CommandResult& r, std::size_t index, const std::string& key, double value,
              const std::string& status, const std::string& message) {
  ++r.failed_rows;
  r.report["failed_rows"].push_back(
      {{"row", index}, {key, value}, {"status", status}, {"message", message}});
}

std::string status_of(const std::exception& e) {
  if (dynamic_cast<const NoPhasematchError*>(&e)) return "no_phasematch";
  if (dynamic_cast<const RangeError*>(&e)) return "out_of_range";
  if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical_error";
  return "error";
}

jsa::SpectralGrid grid_for(const RunConfig& rc, const jsa::PumpSpec& pump,
                           const phasematch::WaveguideSpec& nominal) {
  return jsa::make_phasematched_grid(pump, nominal, rc.grid.points, rc.grid.signal_span_nm,
                                     rc.grid.idler_span_nm, rc.grid.auto_span);
}

Json grid_json(const jsa::SpectralGrid& g) {
  auto axis = [](const jsa::SpectralAxis& a) {
    return Json{{"center_nm", a.spec().center_nm},
                {"span_nm", a.spec().span_nm},
                {"points", a.size()},
                {"omega_min", a.omega().front()},
                {"omega_max", a.omega().back()},
                {"omega_step", a.step()},
                {"units", {{"wavelength", "nm"}, {"omega", "rad/ps"}}}};
  };
  return {{"signal", axis(g.signal)}, {"idler", axis(g.idler)}};
}

}  // namespace

double band_exit(const std::vector<double>& x, const std::vector<double>& y, double lo,
                 double hi) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (std::isnan(y[k]) || (y[k] >= lo && y[k] <= hi)) continue;
    if (k == 0) return x[0];
    const double edge = y[k] < lo ? lo : hi;
    const double t = (edge - y[k - 1]) / (y[k] - y[k - 1]);
    return x[k - 1] + t * (x[k] - x[k - 1]);
  }
  return kNaN;
}

CommandResult phasematch_curve(const RunConfig& rc) {
  CommandResult r{"phasematch-curve", {}, new_report("phasematch-curve"), 0};
  CsvTable t({"pump_nm", "signal_nm", "idler_nm", "status"});
  const auto values = rc.sweep->values();
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double lp = values[k];
    try {
      const auto s = phasematch::solve_phasematch(lp, rc.waveguide_with(phasematch::Uniform{}));
      t.add_row({lp, s.signal_nm, s.idler_nm, std::string("ok")});
    } catch (const Error& e) {
      const auto status = status_of(e);
      t.add_row({lp, kNaN, kNaN, status});
      fail_row(r, k, "pump_nm", lp, status, e.what());
    }
  }
  r.report["results"] = {{"rows", t.rows()}};
  r.files.push_back({r.command + ".csv", t.str()});
  finish(r, rc);
  return r;
}

CommandResult jsa(const RunConfig& rc) {
  CommandResult r{"jsa", {}, new_report("jsa"), 0};
  const auto nominal = rc.waveguide_with(phasematch::Uniform{});
  const auto grid = grid_for(rc, rc.pump, nominal);
  const auto f = jsa::build_jsa(grid, rc.pump, rc.waveguide, rc.threads);
  const auto s = schmidt::decompose(f, false);

  // JSI matrix: first column signal wavelength, header row idler wavelengths.
  {
    std::string out = "signal_nm\\idler_nm";
    for (int k = 0; k < grid.idler.size(); ++k) out += "," + output::format_double(grid.idler.wavelength_nm(k));
    out += '\n';
    for (int j = 0; j < grid.signal.size(); ++j) {
      out += output::format_double(grid.signal.wavelength_nm(j));
      for (int k = 0; k < grid.idler.size(); ++k)
        out += "," + output::format_double(std::norm(f.amplitude(j, k)));
      out += '\n';
    }
    r.files.push_back({"jsa.csv", std::move(out)});
  }
  {
    CsvTable m({"arm", "omega_rad_per_ps", "wavelength_nm", "weight"});
    for (auto arm : {jsa::Arm::Signal, jsa::Arm::Idler})
      for (const auto& x : jsa::marginal_spectrum(f, arm))
        m.add_row({std::string(arm == jsa::Arm::Signal ? "signal" : "idler"), x.omega,
                   x.wavelength_nm, x.weight});
    r.files.push_back({"jsa.marginals.csv", m.str()});
  }
  {
    CsvTable c({"track", "signal_nm", "idler_nm"});
    for (const auto& p : jsa::fwhm_contours(grid, rc.pump, nominal))
      c.add_row({p.track, p.signal_nm, p.idler_nm});
    r.files.push_back({"jsa.contours.csv", c.str()});
  }
  if (rc.document.at("output").at("amplitude").get<bool>()) {
    CsvTable a({"signal_index", "idler_index", "real", "imag"});
    for (int j = 0; j < grid.signal.size(); ++j)
      for (int k = 0; k < grid.idler.size(); ++k)
        a.add_row({std::int64_t{j}, std::int64_t{k}, f.amplitude(j, k).real(), f.amplitude(j, k).imag()});
    r.files.push_back({"jsa.amplitude.csv", a.str()});
  }

  const auto lobe = jsa::central_lobe_moments(f, nominal);
  Json coeffs = Json::array();
  for (Eigen::Index m = 0; m < std::min<Eigen::Index>(s.coefficients.size(), 20); ++m)
    coeffs.push_back(s.coefficients[m]);
  Json res = {
      {"grid", grid_json(grid)},
      {"schmidt",
       {{"purity", s.purity},
        {"schmidt_number", s.schmidt_number},
        {"retained_modes", s.retained_modes},
        {"g2_ss_predicted", schmidt::predicted_autocorrelation(s)},
        {"leading_coefficients", coeffs}}},
      {"central_lobe",
       {{"var_signal", lobe.var_signal},
        {"var_idler", lobe.var_idler},
        {"covariance", lobe.covariance},
        {"correlation", lobe.correlation()}}},
  };
  if (auto filter = rc.spectral_filter(grid.signal.spec().center_nm, grid.idler.spec().center_nm)) {
    const auto fr = jsa::apply_filter(f, *filter);
    const auto fs = schmidt::decompose(fr.filtered, false);
    res["filtered"] = {{"purity", fs.purity},
                       {"schmidt_number", fs.schmidt_number},
                       {"g2_ss_predicted", schmidt::predicted_autocorrelation(fs)},
                       {"heralded_rate_transmission", fr.transmission}};
  }
  r.report["results"] = res;
  finish(r, rc);
  return r;
}

CommandResult sweep_pump_bandwidth(const RunConfig& rc) {
  CommandResult r{"sweep-pump-bandwidth", {}, new_report("sweep-pump-bandwidth"), 0};
  const auto values = rc.sweep->values();
  const bool filtered = rc.filter.has_value();
  struct Row {
    double purity = kNaN, g2 = kNaN, purity_f = kNaN, g2_f = kNaN, transmission = kNaN;
    double span_s = kNaN, span_i = kNaN;
    std::string status = "ok", message;
  };
  std::vector<Row> rows(values.size());
  const auto nominal = rc.waveguide_with(phasematch::Uniform{});
  parallel_for(values.size(), rc.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      Row& row = rows[k];
      try {
        jsa::PumpSpec pump = rc.pump;
        pump.bandwidth_nm = values[k];
        pump.validate();
        const auto grid = grid_for(rc, pump, nominal);
        row.span_s = grid.signal.spec().span_nm;
        row.span_i = grid.idler.spec().span_nm;
        const auto f = jsa::build_jsa(grid, pump, rc.waveguide, 1);
        row.purity = schmidt::purity_gram(f);
        row.g2 = schmidt::predicted_autocorrelation(row.purity);
        if (filtered) {
          const auto fr = jsa::apply_filter(
              f, *rc.spectral_filter(grid.signal.spec().center_nm, grid.idler.spec().center_nm));
          row.purity_f = schmidt::purity_gram(fr.filtered);
          row.g2_f = schmidt::predicted_autocorrelation(row.purity_f);
          row.transmission = fr.transmission;
        }
      } catch (const Error& ex) {
        row.status = status_of(ex);
        row.message = ex.what();
      }
    }
  });

  std::vector<std::string> header = {"bandwidth_nm", "purity", "g2_ss_predicted"};
  if (filtered)
    header.insert(header.end(), {"purity_filtered", "g2_ss_filtered", "filter_transmission"});
  header.insert(header.end(), {"signal_span_nm", "idler_span_nm", "status"});
  CsvTable t(header);
  std::size_t best = values.size();
  for (std::size_t k = 0; k < values.size(); ++k) {
    const Row& row = rows[k];
    std::vector<Cell> cells = {values[k], row.purity, row.g2};
    if (filtered) cells.insert(cells.end(), {row.purity_f, row.g2_f, row.transmission});
    cells.insert(cells.end(), {row.span_s, row.span_i, row.status});
    t.add_row(std::move(cells));
    if (row.status != "ok") {
      fail_row(r, k, "bandwidth_nm", values[k], row.status, row.message);
      continue;
    }
    if (best == values.size() || row.g2 > rows[best].g2) best = k;
  }
  Json res = {{"rows", t.rows()}};
  if (best < values.size()) {
    double peak_x = values[best];
    if (best > 0 && best + 1 < values.size() && rows[best - 1].status == "ok" &&
        rows[best + 1].status == "ok") {
      // vertex of the parabola through the three samples around the maximum
      const double x0 = values[best - 1], x1 = values[best], x2 = values[best + 1];
      const double y0 = rows[best - 1].g2, y1 = rows[best].g2, y2 = rows[best + 1].g2;
      const double d = (x0 - x1) * (x0 - x2) * (x1 - x2);
      const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d;
      const double bb = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d;
      if (a < 0) peak_x = -bb / (2 * a);
    }
    res["peak"] = {{"bandwidth_nm", values[best]},
                   {"bandwidth_nm_interpolated", peak_x},
                   {"purity", rows[best].purity},
                   {"g2_ss_predicted", rows[best].g2}};
  }
  r.report["results"] = res;
  r.files.push_back({r.command + ".csv", t.str()});
  finish(r, rc);
  return r;
}

CommandResult sweep_inhomogeneity(const RunConfig& rc) {
  CommandResult r{"sweep-inhomogeneity", {}, new_report("sweep-inhomogeneity"), 0};
  const auto values = rc.sweep->values();
  const auto nominal = rc.waveguide_with(phasematch::Uniform{});
  const auto grid = grid_for(rc, rc.pump, nominal);
  const double baseline = schmidt::purity_gram(jsa::build_jsa(grid, rc.pump, nominal, rc.threads));
  const int segments = rc.document.at("waveguide").at("segments").get<int>();
  const std::uint64_t base_seed = rc.document.at("waveguide").contains("seed")
                                      ? rc.document.at("waveguide").at("seed").get<std::uint64_t>()
                                      : rc.seed;
  const std::size_t per = static_cast<std::size_t>(rc.ensemble) + 1;
  std::vector<double> purity(values.size() * per, kNaN);
  std::vector<std::string> errors(values.size() * per);
  parallel_for(purity.size(), rc.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t item = b; item < e; ++item) {
      const std::size_t k = item / per, m = item % per;
      try {
        const auto spec = m == 0 ? rc.waveguide_with(phasematch::LinearGradient{values[k]})
                                 : rc.waveguide_with(phasematch::RandomSegments(
                                       values[k], segments, base_seed + (m - 1)));
        purity[item] = schmidt::purity_gram(jsa::build_jsa(grid, rc.pump, spec, 1));
      } catch (const Error& ex) {
        errors[item] = ex.what();
      }
    }
  });

  CsvTable t({"delta_dn", "purity_linear", "purity_random_mean", "purity_random_std", "ensemble",
              "status"});
  std::vector<double> lin(values.size()), mean(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    lin[k] = purity[k * per];
    std::vector<double> ens;
    std::string message = errors[k * per];
    for (std::size_t m = 1; m < per; ++m) {
      if (std::isnan(purity[k * per + m])) {
        if (message.empty()) message = errors[k * per + m];
        continue;
      }
      ens.push_back(purity[k * per + m]);
    }
    double mu = kNaN, sd = kNaN;
    if (!ens.empty()) {
      mu = std::accumulate(ens.begin(), ens.end(), 0.0) / ens.size();
      if (ens.size() > 1) {
        double ss = 0;
        for (double x : ens) ss += (x - mu) * (x - mu);
        sd = std::sqrt(ss / (ens.size() - 1));
      }
    }
    mean[k] = mu;
    const bool ok = message.empty();
    t.add_row({values[k], lin[k], mu, sd, static_cast<std::int64_t>(ens.size()),
               std::string(ok ? "ok" : "numerical_error")});
    if (!ok) fail_row(r, k, "delta_dn", values[k], "numerical_error", message);
  }
  bool monotone = true;
  for (std::size_t k = 1; k < lin.size(); ++k)
    if (!(lin[k] <= lin[k - 1] + 1e-12)) monotone = false;
  r.report["results"] = {
      {"rows", t.rows()},
      {"grid", grid_json(grid)},
      {"homogeneous_purity", baseline},
      {"ensemble", rc.ensemble},
      {"segments", segments},
      {"phase", rc.waveguide.phase == phasematch::PhaseConvention::Local ? "local" : "accumulated"},
      {"linear_monotone_decreasing", monotone},
      {"band", {0.82, 0.90}},
      {"linear_band_exit_delta_dn", band_exit(values, lin, 0.82, 0.90)},
      {"random_band_exit_delta_dn", band_exit(values, mean, 0.82, 0.90)},
  };
  r.files.push_back({r.command + ".csv", t.str()});
  finish(r, rc);
  return r;
}

CommandResult count_sim(const RunConfig& rc) {
  using namespace counting;
  CommandResult r{"count-sim", {}, new_report("count-sim"), 0};
  const auto& src = *rc.source;
  const auto& det = *rc.detector;

  Eigen::VectorXd coeffs;
  if (src.modes == "single") {
    coeffs = Eigen::VectorXd::Ones(1);
  } else if (src.modes == "jsa") {
    const auto nominal = rc.waveguide_with(phasematch::Uniform{});
    const auto f = jsa::build_jsa(grid_for(rc, rc.pump, nominal), rc.pump, rc.waveguide, rc.threads);
    coeffs = schmidt::decompose(f, false).coefficients;
  } else {
    const int m = std::stoi(src.modes);
    coeffs = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(m));
  }

  PowerScaling scaling{src.mu_ref, src.power_ref_mw, rc.noise->raman_signal_per_mw, 0.0};
  bool calibrated = false;
  if (rc.noise->raman_idler_per_mw) {
    scaling.raman_idler_per_mw = *rc.noise->raman_idler_per_mw;
  } else {
    scaling.raman_idler_per_mw =
        calibrate_raman_idler(coeffs, det, scaling, rc.noise->calibration_power_mw,
                              rc.noise->calibration_target_g2h);
    calibrated = true;
  }

  const bool corr = rc.counting.correlations;
  std::vector<std::string> header = {"power_mw", "mu", "pulses", "N_s", "N_si", "eta_H",
                                     "eta_H_err", "eta_P", "eta_P_inconsistent", "N_i1s",
                                     "N_i2s", "N_i1i2s", "g2_H", "g2_H_err", "g2_H_expected"};
  if (corr)
    header.insert(header.end(), {"g2_si", "g2_si_err", "g2_ss", "g2_ss_err", "g2_ii",
                                 "g2_ii_err", "cs_margin_sigma"});
  header.push_back("status");
  CsvTable t(header);

  const auto values = rc.sweep->values();
  std::vector<double> px, nsi, gx, gy, gw;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double p = values[k];
    const auto gain = SqueezingGain::from_coefficients(coeffs, scaling.mu(p));
    const auto noise = scaling.noise(p);
    RunOptions opt{rc.counting.pulses, rc.seed + k, rc.counting.block_size, rc.threads};
    const auto rec = run_experiment(gain, det, noise, Topology::HeraldedG2, opt);
    std::vector<std::string> flags;
    double eta = kNaN, eta_err = kNaN, eta_p = kNaN, g2 = kNaN, g2_err = kNaN, g2_exp = kNaN;
    std::string inconsistent = "";
    try {
      const auto e = heralding_efficiency(rec);
      eta = e.value;
      eta_err = e.std_error;
      const auto pe = preparation_efficiency(eta, det.detector);
      eta_p = pe.value;
      inconsistent = pe.inconsistent ? "true" : "false";
    } catch (const UndefinedEstimatorError&) {
      flags.push_back("eta_H_undefined");
    }
    try {
      const auto g = heralded_g2(rec);
      g2 = g.value;
      g2_err = g.std_error;
    } catch (const UndefinedEstimatorError&) {
      flags.push_back("g2_H_undefined");
    }
    try {
      g2_exp = analytic_heralded_g2(gain, det, noise);
    } catch (const UndefinedEstimatorError&) {
    }
    std::vector<Cell> cells = {p, gain.total(), rec.pulses, rec.heralds(),
                               rec.heralded_coincidences(), eta, eta_err, eta_p, inconsistent,
                               rec.n(I1, S1), rec.n(I2, S1),
                               rec.all_clicked(bit(S1) | bit(I1) | bit(I2)), g2, g2_err, g2_exp};
    if (corr) {
      double v[7];
      std::fill(std::begin(v), std::end(v), kNaN);
      auto est = [&](Topology topo, Port a, Port b, std::uint64_t salt, double* out,
                     const char* flag) {
        RunOptions o = opt;
        o.seed = rc.seed + k + salt * values.size();
        try {
          const auto g = g2_pulsed(run_experiment(gain, det, noise, topo, o), a, b);
          out[0] = g.value;
          out[1] = g.std_error;
        } catch (const UndefinedEstimatorError&) {
          flags.push_back(flag);
        }
      };
      est(Topology::CrossCorrelation, S1, I1, 1, v + 0, "g2_si_undefined");
      est(Topology::SignalAutocorrelation, S1, S2, 2, v + 2, "g2_ss_undefined");
      est(Topology::IdlerAutocorrelation, I1, I2, 3, v + 4, "g2_ii_undefined");
      if (!std::isnan(v[0]) && !std::isnan(v[2]) && !std::isnan(v[4]))
        v[6] = schmidt::cauchy_schwarz_violation(v[0], v[2], v[4], v[1], v[3], v[5]).margin_sigma;
      cells.insert(cells.end(), std::begin(v), std::end(v));
    }
    std::string status;
    for (const auto& f : flags) status += (status.empty() ? "" : ";") + f;
    if (status.empty()) status = "ok";
    cells.push_back(status);
    t.add_row(std::move(cells));
    if (!flags.empty()) fail_row(r, k, "power_mw", p, status, "undefined estimator");

    px.push_back(p);
    nsi.push_back(static_cast<double>(rec.heralded_coincidences()));
    if (!std::isnan(g2)) {
      gx.push_back(p);
      gy.push_back(g2);
      gw.push_back(g2_err > 0 ? 1.0 / (g2_err * g2_err) : 0.0);
    }
  }

  Json res = {{"rows", t.rows()},
              {"schmidt_modes", coeffs.size()},
              {"source_purity", coeffs.array().pow(4).sum() / std::pow(coeffs.squaredNorm(), 2)},
              {"raman_idler_per_mw", scaling.raman_idler_per_mw},
              {"raman_calibrated", calibrated}};
  if (px.size() >= 3) {
    const auto q = polyfit(px, nsi, 2);
    res["coincidence_quadratic_fit"] = {{"coefficients", q.beta}, {"r_squared", q.r_squared}};
  }
  if (gx.size() >= 3) {
    const auto l = polyfit(gx, gy, 1);
    const auto lw = polyfit(gx, gy, 1, gw);
    const double at = rc.noise->calibration_power_mw;
    res["g2_H_linear_fit"] = {{"coefficients", l.beta},
                              {"r_squared", l.r_squared},
                              {"prediction_at_calibration_power", l.predict(at)},
                              {"weighted_coefficients", lw.beta},
                              {"weighted_r_squared", lw.r_squared},
                              {"weighted_prediction_at_calibration_power", lw.predict(at)}};
  }
  r.report["results"] = res;
  r.files.push_back({r.command + ".csv", t.str()});
  finish(r, rc);
  return r;
}

CommandResult run(const std::string& command, const RunConfig& rc) {
  if (command == "phasematch-curve") return phasematch_curve(rc);
  if (command == "jsa") return jsa(rc);
  if (command == "sweep-pump-bandwidth") return sweep_pump_bandwidth(rc);
  if (command == "sweep-inhomogeneity") return sweep_inhomogeneity(rc);
  if (command == "count-sim") return count_sim(rc);
  throw ConfigError("unknown command '" + command + "'");
}

std::vector<std::filesystem::path> write(const CommandResult& result,
                                         const std::filesystem::path& directory) {
  std::vector<std::filesystem::path> paths;
  for (const auto& f : result.files) {
    paths.push_back(directory / f.name);
    output::write_text(paths.back(), f.content);
  }
  paths.push_back(directory / (result.command + ".report.json"));
  output::write_text(paths.back(), result.report.dump(2) + "\n");
  return paths;
}

}  // namespace sfwm::commands
