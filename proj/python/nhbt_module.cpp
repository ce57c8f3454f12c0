#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <vector>

#include "nhbt/coincidence.hpp"
#include "nhbt/dip_fit.hpp"
#include "nhbt/errors.hpp"
#include "nhbt/event_file.hpp"
#include "nhbt/event_synth.hpp"
#include "nhbt/physics.hpp"
#include "nhbt/run_config.hpp"
#include "nhbt/scan_file.hpp"
#include "nhbt/selfcheck.hpp"

namespace py = pybind11;
using namespace nhbt;

PYBIND11_MODULE(nhbt, m) {
  m.doc() = "Antibunched event-stream simulation and coincidence-dip analysis";

  py::register_exception<precondition_error>(m, "PreconditionError");
  py::register_exception<format_error>(m, "FormatError");
  py::register_exception<config_error>(m, "ConfigError");
  py::register_exception<degenerate_fit_error>(m, "DegenerateFitError");

  py::enum_<SpinMode>(m, "SpinMode")
      .value("unpolarized", SpinMode::unpolarized)
      .value("same_spin", SpinMode::same_spin);
  py::enum_<ProfileForm>(m, "ProfileForm")
      .value("approx", ProfileForm::approx)
      .value("exact", ProfileForm::exact);
  py::enum_<GeneratorMode>(m, "GeneratorMode")
      .value("independent", GeneratorMode::independent)
      .value("spin_resolved", GeneratorMode::spin_resolved)
      .value("net_thinning", GeneratorMode::net_thinning);
  py::enum_<DriftKind>(m, "DriftKind")
      .value("none", DriftKind::none)
      .value("sinusoidal", DriftKind::sinusoidal)
      .value("random_walk", DriftKind::random_walk);
  py::enum_<DriftReference>(m, "DriftReference")
      .value("global_mean", DriftReference::global_mean)
      .value("per_block_mean", DriftReference::per_block_mean);

  py::class_<BeamParams>(m, "BeamParams")
      .def(py::init<>())
      .def_readwrite("rate_hz", &BeamParams::rate_hz)
      .def_readwrite("speed_m_s", &BeamParams::speed_m_s)
      .def_readwrite("energy_mev", &BeamParams::energy_mev)
      .def_readwrite("energy_spread_ev", &BeamParams::energy_spread_ev)
      .def_readwrite("coherence_time_s", &BeamParams::coherence_time_s)
      .def("validate", &BeamParams::validate);

  py::class_<ApparatusParams>(m, "ApparatusParams")
      .def(py::init<>())
      .def_readwrite("transmission", &ApparatusParams::transmission)
      .def_readwrite("efficiency", &ApparatusParams::efficiency)
      .def_readwrite("response_time_s", &ApparatusParams::response_time_s)
      .def_readwrite("half_window_s", &ApparatusParams::half_window_s)
      .def_readwrite("dead_time_s", &ApparatusParams::dead_time_s)
      .def("validate", &ApparatusParams::validate);

  py::class_<DipModelParams>(m, "DipModelParams")
      .def(py::init<>())
      .def_readwrite("n_inf", &DipModelParams::n_inf)
      .def_readwrite("tau_d_s", &DipModelParams::tau_d_s)
      .def_readwrite("tau_c_s", &DipModelParams::tau_c_s)
      .def_readwrite("x0_mm", &DipModelParams::x0_mm)
      .def("validate", &DipModelParams::validate);

  py::class_<ScanRow>(m, "ScanRow")
      .def(py::init<>())
      .def_readwrite("x_mm", &ScanRow::x_mm)
      .def_readwrite("n_c", &ScanRow::n_c)
      .def_readwrite("n_t", &ScanRow::n_t)
      .def_readwrite("n_d", &ScanRow::n_d)
      .def_readwrite("duration_s", &ScanRow::duration_s);

  py::class_<DriftProfile>(m, "DriftProfile")
      .def(py::init<>())
      .def_readwrite("kind", &DriftProfile::kind)
      .def_readwrite("relative_amplitude", &DriftProfile::relative_amplitude)
      .def_readwrite("timescale_s", &DriftProfile::timescale_s)
      .def("validate", &DriftProfile::validate);

  py::class_<ScanConfig>(m, "ScanConfig")
      .def(py::init<>())
      .def_readwrite("positions_mm", &ScanConfig::positions_mm)
      .def_readwrite("x0_true_mm", &ScanConfig::x0_true_mm)
      .def_readwrite("dwell_s", &ScanConfig::dwell_s)
      .def_readwrite("seed", &ScanConfig::seed)
      .def_readwrite("mode", &ScanConfig::mode)
      .def("validate", &ScanConfig::validate);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("sigma", &FitResult::sigma)
      .def_readonly("covariance", &FitResult::covariance)
      .def_readonly("chi2_reduced", &FitResult::chi2_reduced)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("objective_history", &FitResult::objective_history);

  py::class_<CorrectedCount>(m, "CorrectedCount")
      .def_readonly("value", &CorrectedCount::value)
      .def_readonly("clamped", &CorrectedCount::clamped)
      .def_readonly("valid", &CorrectedCount::valid);

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("name", &CheckResult::name)
      .def_readonly("passed", &CheckResult::passed)
      .def_readonly("detail", &CheckResult::detail);

  // closed-form model
  m.def("pair_correlation", &pair_correlation, py::arg("t_s"),
        py::arg("tau_c_s"), py::arg("mode") = SpinMode::unpolarized);
  m.def("response_density", &response_density, py::arg("t_s"),
        py::arg("tau_d_s"));
  m.def("dip_depth", &dip_depth, py::arg("tau_c_s"), py::arg("tau_d_s"));
  m.def(
      "expected_profile",
      [](double t, const DipModelParams& p, ProfileForm form) {
        return expected_profile(t, p, form);
      },
      py::arg("t_s"), py::arg("params"), py::arg("form") = ProfileForm::approx);
  m.def("accidental_count", &accidental_count);
  m.def("antibunching_deficit", &antibunching_deficit);
  m.def("noise_to_signal", &noise_to_signal);
  m.def("required_measurement_time", &required_measurement_time);
  m.def("coherence_time_from_energy_spread", &coherence_time_from_energy_spread);
  m.def("coherence_length_m", &coherence_length_m);

  // synthesis and counting
  m.def(
      "generate_source_times",
      [](const BeamParams& beam, double duration_s, std::uint64_t seed,
         GeneratorMode mode) {
        std::vector<double> times;
        for (const auto& ev : generate_source(beam, duration_s, seed, mode)) {
          times.push_back(ev.time_s);
        }
        return times;
      },
      py::arg("beam"), py::arg("duration_s"), py::arg("seed"),
      py::arg("mode") = GeneratorMode::spin_resolved);
  m.def("simulate_scan", &simulate_scan, py::arg("scan"), py::arg("beam"),
        py::arg("apparatus"), py::arg("drift") = DriftProfile{});
  m.def(
      "count_coincidences",
      [](const std::vector<double>& a, const std::vector<double>& b,
         double half_window_s, double offset_s) {
        return count_coincidences(a, b, half_window_s, offset_s);
      },
      py::arg("a"), py::arg("b"), py::arg("half_window_s"),
      py::arg("offset_s") = 0.0);
  m.def(
      "brute_force_count",
      [](const std::vector<double>& a, const std::vector<double>& b,
         double half_window_s, double offset_s) {
        return brute_force_count(a, b, half_window_s, offset_s);
      },
      py::arg("a"), py::arg("b"), py::arg("half_window_s"),
      py::arg("offset_s") = 0.0);
  m.def(
      "drift_correct",
      [](const std::vector<ScanRow>& rows, DriftReference ref,
         std::size_t block_size) {
        return drift_correct(rows, ref, block_size);
      },
      py::arg("rows"), py::arg("reference") = DriftReference::global_mean,
      py::arg("block_size") = std::size_t{8});

  // fitting
  m.def(
      "fit_dip",
      [](const std::vector<double>& x, const std::vector<double>& counts,
         double speed_m_s, ProfileForm form) {
        return fit_dip(x, counts, speed_m_s, FitConfig{}, form);
      },
      py::arg("x_mm"), py::arg("counts"), py::arg("speed_m_s"),
      py::arg("form") = ProfileForm::approx);
  m.def(
      "fit_dip_rows",
      [](const std::vector<ScanRow>& rows, double speed_m_s, ProfileForm form) {
        return fit_dip(rows, speed_m_s, FitConfig{}, form);
      },
      py::arg("rows"), py::arg("speed_m_s"),
      py::arg("form") = ProfileForm::approx);
  m.def(
      "initial_guess",
      [](const std::vector<double>& x, const std::vector<double>& counts,
         double speed_m_s) { return initial_guess(x, counts, speed_m_s); },
      py::arg("x_mm"), py::arg("counts"), py::arg("speed_m_s"));
  m.def(
      "goodness_of_fit",
      [](const std::vector<double>& x, const std::vector<double>& counts,
         const DipModelParams& p, double speed_m_s, ProfileForm form) {
        return goodness_of_fit(x, counts, p, speed_m_s, form);
      },
      py::arg("x_mm"), py::arg("counts"), py::arg("params"),
      py::arg("speed_m_s"), py::arg("form") = ProfileForm::approx);

  // files and self checks
  m.def("write_scan_file", &write_scan_file);
  m.def("read_scan_file", &read_scan_file);
  m.def("read_event_file", [](const std::string& path) {
    auto [t, d] = read_event_file(path);
    return py::make_tuple(t.times_s, d.times_s);
  });
  m.def("write_event_file",
        [](const std::string& path, const std::vector<double>& transmitted,
           const std::vector<double>& reflected) {
          write_event_file(path, EventStream{Channel::transmitted, transmitted},
                           EventStream{Channel::reflected, reflected});
        });
  m.def("run_selfchecks", &run_selfchecks, py::arg("seed") = 1);
}
