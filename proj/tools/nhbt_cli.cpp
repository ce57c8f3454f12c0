#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nhbt/coincidence.hpp"
#include "nhbt/dip_fit.hpp"
#include "nhbt/errors.hpp"
#include "nhbt/event_file.hpp"
#include "nhbt/event_synth.hpp"
#include "nhbt/physics.hpp"
#include "nhbt/rng.hpp"
#include "nhbt/run_config.hpp"
#include "nhbt/scan_file.hpp"
#include "nhbt/selfcheck.hpp"

namespace {

// Exit codes, stable across releases:
//   0 success          1 validation/oracle failure   2 invalid config or file
//   3 I/O failure      4 physics precondition        5 fit did not converge
//   6 unidentifiable model
constexpr int kExitCheckFailed = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitIo = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitNoConvergence = 5;
constexpr int kExitDegenerate = 6;

void kv(const char* key, const std::string& value) {
  std::printf("%s=%s\n", key, value.c_str());
}

void kv(const char* key, double value) { std::printf("%s=%.17g\n", key, value); }

void kv(const char* key, std::uint64_t value) {
  std::printf("%s=%" PRIu64 "\n", key, value);
}

struct SimulateArgs {
  std::string config_path;
  std::string out_path;
  bool events = false;
};

int run_simulate(const SimulateArgs& args) {
  const nhbt::RunConfig config = nhbt::read_run_config(args.config_path);
  const auto warnings = config.validate();

  kv("seed", config.scan.seed);
  kv("mode", nhbt::generator_mode_name(config.scan.mode));
  kv("beam.rate_hz", config.beam.rate_hz);
  kv("beam.speed_m_s", config.beam.speed_m_s);
  kv("beam.coherence_time_s", config.beam.coherence_time_s);
  kv("apparatus.transmission", config.apparatus.transmission);
  kv("apparatus.efficiency", config.apparatus.efficiency);
  kv("apparatus.tau_d_s", config.apparatus.response_time_s);
  kv("apparatus.half_window_s", config.apparatus.half_window_s);
  kv("apparatus.dead_time_s", config.apparatus.dead_time_s);
  kv("scan.positions", static_cast<std::uint64_t>(config.scan.positions_mm.size()));
  kv("scan.x0_mm", config.scan.x0_true_mm);
  kv("scan.dwell_s", config.scan.dwell_s);
  kv("drift.kind", nhbt::drift_kind_name(config.drift.kind));
  kv("drift.amplitude", config.drift.relative_amplitude);
  for (const auto& w : warnings) kv("warning", w);

  if (args.events) {
    // Single-position mode: raw detector streams at the first scan point.
    const double x = config.scan.positions_mm.front();
    const nhbt::DriftModel drift(config.drift,
                                 nhbt::derive_seed(config.scan.seed, 0xD81F7ull),
                                 config.scan.dwell_s);
    // Same substream the scan would use for this position, so the event
    // file is the raw view of the scan's first row.
    const std::uint64_t base = nhbt::derive_seed(
        config.scan.seed,
        std::bit_cast<std::uint64_t>(x));
    auto source =
        nhbt::generate_source(config.beam, config.scan.dwell_s,
                              nhbt::derive_seed(base, 1), config.scan.mode,
                              &drift, 0.0);
    auto [arm_t, arm_d] = nhbt::split_beam(source, config.apparatus.transmission,
                                           nhbt::derive_seed(base, 2));
    auto det_t = nhbt::detect(arm_t, config.apparatus, nhbt::derive_seed(base, 3));
    auto det_d = nhbt::detect(arm_d, config.apparatus, nhbt::derive_seed(base, 4));
    const double shift =
        (x - config.scan.x0_true_mm) * 1.0e-3 / config.beam.speed_m_s;
    std::uint64_t dropped = 0;
    std::vector<double> shifted;
    shifted.reserve(det_t.times_s.size());
    for (const double t : det_t.times_s) {
      if (t + shift < 0.0) {
        ++dropped;  // the file format cannot hold pre-start timestamps
      } else {
        shifted.push_back(t + shift);
      }
    }
    det_t.times_s = std::move(shifted);
    nhbt::write_event_file(args.out_path, det_t, det_d);
    kv("x_mm", x);
    kv("n_t", static_cast<std::uint64_t>(det_t.times_s.size()));
    kv("n_d", static_cast<std::uint64_t>(det_d.times_s.size()));
    kv("dropped_negative", dropped);
  } else {
    const auto rows = nhbt::simulate_scan(config.scan, config.beam,
                                          config.apparatus, config.drift);
    nhbt::write_scan_file(args.out_path, rows);
    kv("rows", static_cast<std::uint64_t>(rows.size()));
  }
  kv("out", args.out_path);
  return 0;
}

struct CountArgs {
  std::string file_a;
  std::string file_b;
  double half_window = 0.0;
  double offset = 0.0;
  bool oracle = false;
};

int run_count(const CountArgs& args) {
  std::vector<double> a, b;
  if (args.file_b.empty()) {
    auto [t, d] = nhbt::read_event_file(args.file_a);
    a = std::move(t.times_s);
    b = std::move(d.times_s);
  } else {
    for (const auto& rec : nhbt::read_event_records(args.file_a)) {
      a.push_back(static_cast<double>(rec.time_ps) * 1e-12);
    }
    for (const auto& rec : nhbt::read_event_records(args.file_b)) {
      b.push_back(static_cast<double>(rec.time_ps) * 1e-12);
    }
  }
  const std::uint64_t n_c =
      nhbt::count_coincidences(a, b, args.half_window, args.offset);
  kv("n_t", static_cast<std::uint64_t>(a.size()));
  kv("n_d", static_cast<std::uint64_t>(b.size()));
  kv("n_c", n_c);
  if (args.oracle) {
    const std::uint64_t slow =
        nhbt::brute_force_count(a, b, args.half_window, args.offset);
    kv("n_c_oracle", slow);
    kv("oracle_match", std::uint64_t{n_c == slow});
    if (n_c != slow) return kExitCheckFailed;
  }
  return 0;
}

struct FitArgs {
  std::string scan_path;
  std::string report_path;
  double speed = 630.0;
  std::string form = "approx";
  bool raw = false;
};

int run_fit(const FitArgs& args) {
  const auto rows = nhbt::read_scan_file(args.scan_path);
  const nhbt::ProfileForm form = args.form == "exact"
                                     ? nhbt::ProfileForm::exact
                                     : nhbt::ProfileForm::approx;
  std::vector<double> x(rows.size()), counts(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) x[i] = rows[i].x_mm;
  if (args.raw) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      counts[i] = static_cast<double>(rows[i].n_c);
    }
  } else {
    const auto corrected = nhbt::drift_correct(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      counts[i] = corrected[i].value;
    }
  }

  const nhbt::FitResult fit =
      nhbt::fit_dip(x, counts, args.speed, nhbt::FitConfig{}, form);

  kv("form", args.form == "exact" ? "exact" : "approx");
  kv("drift_corrected", std::uint64_t{args.raw ? 0u : 1u});
  kv("converged", std::uint64_t{fit.converged ? 1u : 0u});
  kv("iterations", static_cast<std::uint64_t>(fit.iterations));
  kv("chi2_reduced", fit.chi2_reduced);
  kv("n_inf", fit.params.n_inf);
  kv("n_inf_sigma", fit.sigma[0]);
  kv("tau_d_s", fit.params.tau_d_s);
  kv("tau_d_s_sigma", fit.sigma[1]);
  kv("tau_c_s", fit.params.tau_c_s);
  kv("tau_c_s_sigma", fit.sigma[2]);
  kv("x0_mm", fit.params.x0_mm);
  kv("x0_mm_sigma", fit.sigma[3]);

  const std::string report_path =
      args.report_path.empty() ? args.scan_path + ".fit.txt" : args.report_path;
  {
    std::ofstream report(report_path, std::ios::trunc);
    if (!report) throw std::runtime_error("cannot write report: " + report_path);
    char line[160];
    std::snprintf(line, sizeof line, "converged = %s\n",
                  fit.converged ? "yes" : "no");
    report << line;
    std::snprintf(line, sizeof line, "iterations = %d\n", fit.iterations);
    report << line;
    std::snprintf(line, sizeof line, "chi2_reduced = %.6g\n", fit.chi2_reduced);
    report << line;
    std::snprintf(line, sizeof line, "n_inf = %.8g ± %.3g\n",
                  fit.params.n_inf, fit.sigma[0]);
    report << line;
    std::snprintf(line, sizeof line, "tau_d_s = %.8g ± %.3g\n",
                  fit.params.tau_d_s, fit.sigma[1]);
    report << line;
    std::snprintf(line, sizeof line, "tau_c_s = %.8g ± %.3g\n",
                  fit.params.tau_c_s, fit.sigma[2]);
    report << line;
    std::snprintf(line, sizeof line, "x0_mm = %.8g ± %.3g\n",
                  fit.params.x0_mm, fit.sigma[3]);
    report << line;
  }
  kv("report", report_path);
  return fit.converged ? 0 : kExitNoConvergence;
}

struct PlanArgs {
  double rate = 2000.0;
  double transmission = 0.5;
  double efficiency = 1.0;
  double rate_t = 0.0;  ///< overrides rate * transmission * efficiency if set
  double rate_d = 0.0;
  double tau_c = 2.5e-9;
  double tau_d = 0.33e-6;
  double target_ns = 1.0;
};

int run_plan(const PlanArgs& args) {
  double rate_t = args.rate_t;
  double rate_d = args.rate_d;
  if (rate_t <= 0.0 && rate_d <= 0.0) {
    rate_t = args.rate * args.transmission * args.efficiency;
    rate_d = args.rate * (1.0 - args.transmission) * args.efficiency;
  }
  const double t0 = nhbt::required_measurement_time(args.target_ns, args.tau_d,
                                                    args.tau_c, rate_t, rate_d);
  kv("rate_t_hz", rate_t);
  kv("rate_d_hz", rate_d);
  kv("tau_c_s", args.tau_c);
  kv("tau_d_s", args.tau_d);
  kv("target_noise_to_signal", args.target_ns);
  kv("required_t0_s", t0);
  kv("expected_n_inf", nhbt::accidental_count(args.tau_d, rate_t, rate_d, t0));
  kv("expected_deficit",
     nhbt::antibunching_deficit(args.tau_c, rate_t, rate_d, t0));
  kv("dip_depth", nhbt::dip_depth(args.tau_c, args.tau_d));
  kv("noise_to_signal_check",
     nhbt::noise_to_signal(args.tau_d, args.tau_c, rate_t, rate_d, t0));
  return 0;
}

int run_validate(std::uint64_t seed) {
  const auto results = nhbt::run_selfchecks(seed);
  bool all_passed = true;
  for (const auto& r : results) {
    std::printf("check.%s=%s\n", r.name.c_str(), r.passed ? "pass" : "fail");
    std::printf("check.%s.detail=%s\n", r.name.c_str(), r.detail.c_str());
    all_passed = all_passed && r.passed;
  }
  kv("validate", all_passed ? "pass" : "fail");
  return all_passed ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Antibunched event-stream simulator and coincidence-dip analysis"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Simulate a scan (CSV) or one position's event file");
  simulate->add_option("--config", sim.config_path, "Run configuration file")
      ->required();
  simulate->add_option("--out", sim.out_path, "Output path")->required();
  simulate->add_flag("--events", sim.events,
                     "Write the first position's raw event file instead of "
                     "the scan CSV");

  CountArgs cnt;
  auto* count = app.add_subcommand("count", "Count coincidences in event files");
  count->add_option("--events", cnt.file_a,
                    "Event file (two-channel, or arm A if --events-b given)")
      ->required();
  count->add_option("--events-b", cnt.file_b, "Event file for arm B");
  count->add_option("--half-window", cnt.half_window, "Half window, seconds")
      ->required();
  count->add_option("--offset", cnt.offset, "Lag offset, seconds");
  count->add_flag("--oracle", cnt.oracle,
                  "Also run the quadratic reference counter and compare");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Fit the dip model to a scan CSV");
  fitc->add_option("--scan", fit.scan_path, "Scan CSV path")->required();
  fitc->add_option("--speed", fit.speed, "Particle speed, m/s (default 630)");
  fitc->add_option("--form", fit.form, "Model form: approx | exact")
      ->check(CLI::IsMember({"approx", "exact"}));
  fitc->add_flag("--raw", fit.raw, "Fit raw counts without drift correction");
  fitc->add_option("--report", fit.report_path,
                   "Report path (default: <scan>.fit.txt)");

  PlanArgs plan;
  auto* planc = app.add_subcommand(
      "plan", "Required measuring time for a target noise-to-signal ratio");
  planc->add_option("--rate", plan.rate, "Total source rate, Hz");
  planc->add_option("--transmission", plan.transmission, "Splitter transmission");
  planc->add_option("--efficiency", plan.efficiency, "Detector efficiency");
  planc->add_option("--rate-t", plan.rate_t, "Transmitted-arm rate override, Hz");
  planc->add_option("--rate-d", plan.rate_d, "Reflected-arm rate override, Hz");
  planc->add_option("--tau-c", plan.tau_c, "Coherence time, seconds");
  planc->add_option("--tau-d", plan.tau_d, "Response time, seconds");
  planc->add_option("--target-ns", plan.target_ns,
                    "Target noise-to-signal ratio (smaller = cleaner)");

  std::uint64_t validate_seed = 1;
  auto* validate = app.add_subcommand(
      "validate", "Run the built-in consistency suite");
  validate->add_option("--seed", validate_seed, "Self-check seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (count->parsed()) return run_count(cnt);
    if (fitc->parsed()) return run_fit(fit);
    if (planc->parsed()) return run_plan(plan);
    if (validate->parsed()) return run_validate(validate_seed);
  } catch (const nhbt::config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadInput;
  } catch (const nhbt::format_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadInput;
  } catch (const nhbt::precondition_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitPrecondition;
  } catch (const nhbt::degenerate_fit_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDegenerate;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return 0;
}
