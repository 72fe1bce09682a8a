#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sfwm/commands.hpp"
#include "sfwm/config.hpp"
#include "sfwm/counting.hpp"
#include "sfwm/dispersion.hpp"
#include "sfwm/errors.hpp"
#include "sfwm/phasematch.hpp"
#include "sfwm/pump_jsa.hpp"
#include "sfwm/schmidt.hpp"
#include "sfwm/units.hpp"

namespace py = pybind11;
using namespace sfwm;

PYBIND11_MODULE(_core, m) {
  m.doc() = "SFWM heralded-photon source toolkit";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<NoPhasematchError>(m, "NoPhasematchError", numerical.ptr());
  py::register_exception<UndefinedEstimatorError>(m, "UndefinedEstimatorError", base.ptr());

  m.def("omega_from_nm", &units::omega_from_nm);
  m.def("nm_from_omega", &units::nm_from_omega);

  // dispersion
  py::enum_<dispersion::Axis>(m, "Axis").value("fast", dispersion::Axis::Fast).value("slow", dispersion::Axis::Slow);
  py::class_<dispersion::SellmeierModel>(m, "SellmeierModel")
      .def_static("fused_silica", &dispersion::SellmeierModel::fused_silica)
      .def_static("constant_index", &dispersion::SellmeierModel::constant_index, py::arg("index"), py::arg("min_nm") = 600.0,
                  py::arg("max_nm") = 1600.0)
      .def_readwrite("min_nm", &dispersion::SellmeierModel::min_nm)
      .def_readwrite("max_nm", &dispersion::SellmeierModel::max_nm)
      .def("base_index", &dispersion::SellmeierModel::base_index);
  m.def("refractive_index", &dispersion::refractive_index, py::arg("wavelength_nm"), py::arg("axis"),
        py::arg("model") = dispersion::SellmeierModel::fused_silica(), py::arg("birefringence") = 0.0);
  m.def("group_velocity", &dispersion::group_velocity, py::arg("wavelength_nm"), py::arg("axis"),
        py::arg("model") = dispersion::SellmeierModel::fused_silica(), py::arg("birefringence") = 0.0,
        py::arg("relative_step") = 1e-4);

  // phasematch
  py::enum_<phasematch::PhaseConvention>(m, "PhaseConvention")
      .value("local", phasematch::PhaseConvention::Local)
      .value("accumulated", phasematch::PhaseConvention::Accumulated);
  py::class_<phasematch::WaveguideSpec>(m, "WaveguideSpec")
      .def(py::init<>())
      .def_readwrite("length_cm", &phasematch::WaveguideSpec::length_cm)
      .def_readwrite("birefringence", &phasematch::WaveguideSpec::birefringence)
      .def_readwrite("phase", &phasematch::WaveguideSpec::phase)
      .def_readwrite("material", &phasematch::WaveguideSpec::material)
      .def("set_uniform", [](phasematch::WaveguideSpec& s) { s.profile = phasematch::Uniform{}; })
      .def("set_linear_gradient", [](phasematch::WaveguideSpec& s, double delta) { s.profile = phasematch::LinearGradient{delta}; })
      .def("set_random_segments",
           [](phasematch::WaveguideSpec& s, double delta, int segments, std::uint64_t seed) {
             s.profile = phasematch::RandomSegments(delta, segments, seed);
           },
           py::arg("delta"), py::arg("segments") = phasematch::RandomSegments::kDefaultSegments, py::arg("seed") = 1)
      .def("birefringence_at", &phasematch::WaveguideSpec::birefringence_at);
  m.def("delta_k", py::overload_cast<double, double, const phasematch::WaveguideSpec&>(&phasematch::delta_k),
        py::arg("omega_s"), py::arg("omega_i"), py::arg("spec") = phasematch::WaveguideSpec{});
  m.def("energy_conjugate", &phasematch::energy_conjugate);
  m.def("solve_phasematch",
        [](double pump_nm, const phasematch::WaveguideSpec& spec) {
          const auto r = phasematch::solve_phasematch(pump_nm, spec);
          return py::make_tuple(r.signal_nm, r.idler_nm);
        },
        py::arg("pump_nm"), py::arg("spec") = phasematch::WaveguideSpec{});
  m.def("phi_uniform", &phasematch::phi_uniform);
  m.def("phi_inhomogeneous", &phasematch::phi_inhomogeneous);

  // pump and joint spectrum
  py::class_<jsa::PumpSpec>(m, "PumpSpec")
      .def(py::init([](double wl, double bw, double mu) { return jsa::PumpSpec{wl, bw, mu}; }),
           py::arg("wavelength_nm") = 729.0, py::arg("bandwidth_nm") = 3.1, py::arg("mean_pairs") = 0.01)
      .def_readwrite("wavelength_nm", &jsa::PumpSpec::wavelength_nm)
      .def_readwrite("bandwidth_nm", &jsa::PumpSpec::bandwidth_nm)
      .def_readwrite("mean_pairs", &jsa::PumpSpec::mean_pairs)
      .def("intensity_fwhm_omega", &jsa::PumpSpec::intensity_fwhm_omega);
  py::enum_<jsa::Arm>(m, "Arm").value("signal", jsa::Arm::Signal).value("idler", jsa::Arm::Idler);
  py::class_<jsa::SpectralAxis>(m, "SpectralAxis")
      .def(py::init([](double c, double s, int n) { return jsa::SpectralAxis({c, s, n}); }), py::arg("center_nm"),
           py::arg("span_nm"), py::arg("points"))
      .def_property_readonly("omega", py::overload_cast<>(&jsa::SpectralAxis::omega, py::const_))
      .def_property_readonly("step", &jsa::SpectralAxis::step)
      .def("wavelength_nm", &jsa::SpectralAxis::wavelength_nm)
      .def("__len__", &jsa::SpectralAxis::size);
  py::class_<jsa::SpectralGrid>(m, "SpectralGrid")
      .def(py::init<jsa::SpectralAxis, jsa::SpectralAxis>(), py::arg("signal"), py::arg("idler"))
      .def_readonly("signal", &jsa::SpectralGrid::signal)
      .def_readonly("idler", &jsa::SpectralGrid::idler);
  py::class_<jsa::JointSpectralAmplitude>(m, "JointSpectralAmplitude")
      .def_readonly("grid", &jsa::JointSpectralAmplitude::grid)
      .def_readonly("amplitude", &jsa::JointSpectralAmplitude::amplitude)
      .def("intensity", &jsa::JointSpectralAmplitude::intensity)
      .def("norm_squared", &jsa::JointSpectralAmplitude::norm_squared);
  m.def("make_phasematched_grid", &jsa::make_phasematched_grid, py::arg("pump"), py::arg("spec"),
        py::arg("points") = 512, py::arg("signal_span_nm") = 20.0, py::arg("idler_span_nm") = 28.0,
        py::arg("auto_span") = false);
  m.def("build_jsa", &jsa::build_jsa, py::arg("grid"), py::arg("pump"), py::arg("spec"), py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("jsa_from_function", &jsa::jsa_from_function);
  py::class_<jsa::SpectralFilter>(m, "SpectralFilter")
      .def_static("tophat",
                  [](jsa::Arm a, double c, double w) { return jsa::SpectralFilter{a, jsa::TopHat{c, w}}; },
                  py::arg("target"), py::arg("center_nm"), py::arg("width_nm"))
      .def_static("gaussian",
                  [](jsa::Arm a, double c, double w) { return jsa::SpectralFilter{a, jsa::GaussianPassband{c, w}}; },
                  py::arg("target"), py::arg("center_nm"), py::arg("fwhm_nm"))
      .def("amplitude_transmission", &jsa::SpectralFilter::amplitude_transmission);
  m.def("apply_filter", [](const jsa::JointSpectralAmplitude& f, const jsa::SpectralFilter& filter) {
    auto r = jsa::apply_filter(f, filter);
    return py::make_tuple(r.filtered, r.transmission);
  });

  // Schmidt decomposition
  py::class_<schmidt::SchmidtResult>(m, "SchmidtResult")
      .def_readonly("coefficients", &schmidt::SchmidtResult::coefficients)
      .def_readonly("signal_modes", &schmidt::SchmidtResult::signal_modes)
      .def_readonly("idler_modes", &schmidt::SchmidtResult::idler_modes)
      .def_readonly("purity", &schmidt::SchmidtResult::purity)
      .def_readonly("schmidt_number", &schmidt::SchmidtResult::schmidt_number)
      .def_readonly("retained_modes", &schmidt::SchmidtResult::retained_modes);
  m.def("decompose", &schmidt::decompose, py::arg("jsa"), py::arg("with_modes") = true,
        py::call_guard<py::gil_scoped_release>());
  m.def("purity_gram", &schmidt::purity_gram);
  m.def("reconstruct", &schmidt::reconstruct);
  m.def("predicted_autocorrelation", py::overload_cast<double>(&schmidt::predicted_autocorrelation));
  m.def("purity_from_g2", &schmidt::purity_from_g2);

  // counting
  using namespace counting;
  py::class_<DetectorModel>(m, "DetectorModel")
      .def(py::init([](double s, double i, double d, double dark) { return DetectorModel{s, i, d, dark}; }),
           py::arg("path_signal") = 0.8, py::arg("path_idler") = 0.8, py::arg("detector") = 0.5, py::arg("dark") = 0.0)
      .def_readwrite("path_signal", &DetectorModel::path_signal)
      .def_readwrite("path_idler", &DetectorModel::path_idler)
      .def_readwrite("detector", &DetectorModel::detector)
      .def_readwrite("dark", &DetectorModel::dark);
  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init([](double s, double i) { return NoiseModel{s, i}; }), py::arg("raman_signal") = 0.0,
           py::arg("raman_idler") = 0.0)
      .def_readwrite("raman_signal", &NoiseModel::raman_signal)
      .def_readwrite("raman_idler", &NoiseModel::raman_idler);
  py::enum_<Topology>(m, "Topology")
      .value("cross_correlation", Topology::CrossCorrelation)
      .value("idler_autocorrelation", Topology::IdlerAutocorrelation)
      .value("signal_autocorrelation", Topology::SignalAutocorrelation)
      .value("heralded_g2", Topology::HeraldedG2);
  py::enum_<Port>(m, "Port").value("S1", S1).value("S2", S2).value("I1", I1).value("I2", I2).export_values();
  py::class_<SqueezingGain>(m, "SqueezingGain")
      .def_static("single_mode", &SqueezingGain::single_mode)
      .def_static("equal_modes", &SqueezingGain::equal_modes)
      .def_static("from_coefficients", &SqueezingGain::from_coefficients)
      .def_readonly("mode_means", &SqueezingGain::mode_means)
      .def("total", &SqueezingGain::total)
      .def("purity", &SqueezingGain::purity);
  py::class_<CountingRecord>(m, "CountingRecord")
      .def_readonly("pulses", &CountingRecord::pulses)
      .def_readonly("seed", &CountingRecord::seed)
      .def_readonly("patterns", &CountingRecord::patterns)
      .def("all_clicked", &CountingRecord::all_clicked)
      .def("heralds", &CountingRecord::heralds)
      .def("heralded_coincidences", &CountingRecord::heralded_coincidences);
  m.def("run_experiment",
        [](const SqueezingGain& g, const DetectorModel& d, const NoiseModel& n, Topology t, std::uint64_t pulses,
           std::uint64_t seed, std::uint64_t block_size, int threads) {
          return run_experiment(g, d, n, t, {pulses, seed, block_size, threads});
        },
        py::arg("gain"), py::arg("detector"), py::arg("noise"), py::arg("topology"), py::arg("pulses") = 10'000'000,
        py::arg("seed") = 1, py::arg("block_size") = kDefaultBlockSize, py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("analytic_all_click", &analytic_all_click);
  auto estimate = [](const Estimate& e) { return py::make_tuple(e.value, e.std_error); };
  m.def("g2_pulsed", [=](const CountingRecord& r, Port x, Port y) { return estimate(g2_pulsed(r, x, y)); });
  m.def("heralded_g2", [=](const CountingRecord& r) { return estimate(heralded_g2(r)); });
  m.def("heralding_efficiency", [=](const CountingRecord& r) { return estimate(heralding_efficiency(r)); });
  m.def("preparation_efficiency", [](double eta_h, double eta_det) { return preparation_efficiency(eta_h, eta_det).value; });
  m.def("analytic_g2", &analytic_g2);
  m.def("analytic_heralded_g2", &analytic_heralded_g2);
  m.def("analytic_heralding_efficiency", &analytic_heralding_efficiency);

  // command-level entry point, same path as the command-line tool
  m.def("run_command",
        [](const std::string& command, const std::string& config_json, std::optional<std::string> preset,
           std::optional<std::uint64_t> seed, int threads) {
          const auto doc = config_json.empty() ? config::Json::object() : config::Json::parse(config_json);
          commands::CommandResult r;
          {
            py::gil_scoped_release release;
            r = commands::run(command, config::resolve(command, doc, preset, seed, threads));
          }
          py::dict files;
          for (const auto& f : r.files) files[py::str(f.name)] = f.content;
          return py::make_tuple(files, r.report.dump(2));
        },
        py::arg("command"), py::arg("config_json") = "", py::arg("preset") = std::nullopt,
        py::arg("seed") = std::nullopt, py::arg("threads") = 1);
}
