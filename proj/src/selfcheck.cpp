#include "nhbt/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nhbt/coincidence.hpp"
#include "nhbt/event_file.hpp"
#include "nhbt/event_synth.hpp"
#include "nhbt/physics.hpp"
#include "nhbt/rng.hpp"

namespace nhbt {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> sorted_uniform(Rng& rng, std::size_t n, double horizon) {
  std::vector<double> t(n);
  for (double& v : t) v = rng.uniform() * horizon;
  std::sort(t.begin(), t.end());
  return t;
}

/// Simpson quadrature on a uniform grid with an odd point count.
double simpson(const std::vector<double>& f, double h) {
  double s = f.front() + f.back();
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    s += f[i] * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return s * h / 3.0;
}

}  // namespace

CheckResult check_oracle_equivalence(const CountFn& count, std::uint64_t seed) {
  CheckResult result{"oracle_equivalence", true, ""};
  Rng rng = Rng::substream(seed, 101);

  std::vector<std::vector<double>> streams;
  streams.push_back(sorted_uniform(rng, 1500, 1.0));
  streams.push_back(sorted_uniform(rng, 1600, 1.0));
  // Heavy ties: timestamps on a coarse grid.
  {
    std::vector<double> q(1200);
    for (double& v : q) v = std::round(rng.uniform() * 50.0) / 50.0;
    std::sort(q.begin(), q.end());
    streams.push_back(std::move(q));
  }
  // Exact window-edge lags against stream 0.
  {
    std::vector<double> e;
    for (std::size_t i = 0; i < streams[0].size(); i += 3) {
      e.push_back(streams[0][i] + 3e-3);
      e.push_back(streams[0][i] - 3e-3);
    }
    std::sort(e.begin(), e.end());
    streams.push_back(std::move(e));
  }
  streams.push_back({});  // empty

  const double windows[] = {1e-4, 3e-3, 0.02};
  const double offsets[] = {0.0, 0.01, -0.01, 3e-3};
  std::size_t cases = 0;
  for (std::size_t ia = 0; ia < streams.size(); ++ia) {
    for (std::size_t ib = 0; ib < streams.size(); ++ib) {
      for (const double w : windows) {
        for (const double off : offsets) {
          const std::uint64_t fast = count(streams[ia], streams[ib], w, off);
          const std::uint64_t slow =
              brute_force_count(streams[ia], streams[ib], w, off);
          ++cases;
          if (fast != slow) {
            result.passed = false;
            result.detail = "streams (" + std::to_string(ia) + "," +
                            std::to_string(ib) + ") window " + fmt(w) +
                            " offset " + fmt(off) + ": fast=" +
                            std::to_string(fast) + " oracle=" +
                            std::to_string(slow);
            return result;
          }
        }
      }
    }
  }
  result.detail = std::to_string(cases) + " cases identical";
  return result;
}

CheckResult check_convolution_identity() {
  CheckResult result{"convolution_identity", true, ""};
  const double param_sets[][2] = {
      {19e-9, 0.33e-6}, {20e-9, 1.3e-6}, {1e-3, 2e-3}};
  double worst = 0.0;
  for (const auto& ps : param_sets) {
    const double tau_c = ps[0];
    const double tau_d = ps[1];
    DipModelParams p{1.0, tau_d, tau_c, 0.0, {}};
    for (const double t_over : {0.0, 0.5, 1.0, 2.0}) {
      const double t = t_over * tau_d;
      const double lo = std::min(t - 8.0 * tau_d, -8.0 * tau_c);
      const double hi = std::max(t + 8.0 * tau_d, 8.0 * tau_c);
      const int n = 4001;
      const double h = (hi - lo) / (n - 1);
      std::vector<double> f(n);
      for (int i = 0; i < n; ++i) {
        const double s = lo + i * h;
        f[i] = response_density(t - s, tau_d) *
               pair_correlation(s, tau_c, SpinMode::unpolarized);
      }
      const double numeric = simpson(f, h);
      const double closed = expected_profile(t, p, ProfileForm::exact);
      const double rel = std::abs(numeric - closed) / closed;
      worst = std::max(worst, rel);
      if (rel > 1e-8) {
        result.passed = false;
        result.detail = "tau_c=" + fmt(tau_c) + " tau_d=" + fmt(tau_d) +
                        " t=" + fmt(t) + ": quadrature " + fmt(numeric) +
                        " vs closed form " + fmt(closed);
        return result;
      }
    }
  }
  result.detail = "max relative deviation " + fmt(worst);
  return result;
}

CheckResult check_generator_crosscheck(std::uint64_t seed) {
  CheckResult result{"generator_crosscheck", true, ""};

  BeamParams beam;
  beam.rate_hz = 1000.0;
  beam.coherence_time_s = 5e-5;
  beam.energy_spread_ev = PhysConstants::hbar_ev_s / (2.0 * 5e-5);
  const double duration = 500.0;
  const int bins = 24;
  const double max_lag = 6.0 * beam.coherence_time_s;

  const GeneratorMode modes[] = {GeneratorMode::spin_resolved,
                                 GeneratorMode::net_thinning,
                                 GeneratorMode::independent};
  std::vector<std::vector<double>> g(3);
  std::vector<std::vector<double>> g_sigma(3);
  for (int m = 0; m < 3; ++m) {
    const auto src = generate_source(beam, duration,
                                     derive_seed(seed, 200 + m), modes[m]);
    const auto [arm_a, arm_b] =
        split_beam(src, 0.5, derive_seed(seed, 300 + m));
    const auto h = lag_histogram(arm_a.times_s, arm_b.times_s, max_lag, bins);
    const double rate_a = arm_a.times_s.size() / duration;
    const double rate_b = arm_b.times_s.size() / duration;
    g[m] = normalized_lag_profile(h, rate_a, rate_b, duration);
    const double denom = rate_a * rate_b * duration * h.bin_width_s();
    g_sigma[m].resize(bins);
    for (int i = 0; i < bins; ++i) {
      g_sigma[m][i] = std::sqrt(static_cast<double>(h.counts[i]) + 1.0) / denom;
    }
  }

  for (int i = 0; i < bins; ++i) {
    const double diff = std::abs(g[0][i] - g[1][i]);
    const double tol = 5.0 * std::hypot(g_sigma[0][i], g_sigma[1][i]);
    if (diff > tol) {
      result.passed = false;
      result.detail = "bin " + std::to_string(i) +
                      ": spin-resolved and net-thinning profiles differ by " +
                      fmt(diff) + " (allowed " + fmt(tol) + ")";
      return result;
    }
  }

  auto central = [&](int m) { return 0.5 * (g[m][bins / 2 - 1] + g[m][bins / 2]); };
  auto plateau = [&](int m) {
    return 0.25 * (g[m][0] + g[m][1] + g[m][bins - 2] + g[m][bins - 1]);
  };
  for (int m = 0; m < 2; ++m) {
    if (central(m) < 0.35 || central(m) > 0.65) {
      result.passed = false;
      result.detail = std::string("generator ") +
                      (m == 0 ? "spin_resolved" : "net_thinning") +
                      " central correlation " + fmt(central(m)) +
                      " outside [0.35, 0.65]";
      return result;
    }
    if (plateau(m) < 0.9 || plateau(m) > 1.1) {
      result.passed = false;
      result.detail = "plateau correlation " + fmt(plateau(m)) +
                      " outside [0.9, 1.1]";
      return result;
    }
  }
  if (central(2) < 0.85) {
    result.passed = false;
    result.detail = "independent generator shows a dip: g(0) = " +
                    fmt(central(2));
    return result;
  }
  result.detail = "dip depth sr=" + fmt(1.0 - central(0)) +
                  " nt=" + fmt(1.0 - central(1)) +
                  " indep g(0)=" + fmt(central(2));
  return result;
}

CheckResult check_drift_correction_inverse(std::uint64_t /*seed*/) {
  CheckResult result{"drift_correction_inverse", true, ""};

  // Integer drifted rows whose deltas sum to zero: the sample means equal
  // the undrifted values, so correction must restore n_c = 5000 exactly.
  // Both arms carry the same relative drift d = dt/40000; the coincidence
  // rows are inflated by the first-order factor 1 + 2d.
  const std::int64_t deltas[] = {-4000, -2000, 0, 2000, 4000};
  std::vector<ScanRow> rows;
  for (int rep = 0; rep < 4; ++rep) {
    for (const std::int64_t dt : deltas) {
      ScanRow row;
      row.x_mm = static_cast<double>(rows.size());
      row.n_t = static_cast<std::uint64_t>(40000 + dt);
      row.n_d = static_cast<std::uint64_t>(60000 + dt + dt / 2);
      row.n_c = static_cast<std::uint64_t>(5000 + dt / 4);
      row.duration_s = 1.0;
      rows.push_back(row);
    }
  }

  double raw_spread = 0.0;
  for (const ScanRow& r : rows) {
    raw_spread = std::max(raw_spread,
                          std::abs(static_cast<double>(r.n_c) - 5000.0));
  }
  if (raw_spread < 900.0) {
    result.passed = false;
    result.detail = "fixture did not vary: raw spread " + fmt(raw_spread);
    return result;
  }

  for (const DriftReference ref :
       {DriftReference::global_mean, DriftReference::per_block_mean}) {
    const auto corrected = drift_correct(rows, ref, rows.size());
    for (std::size_t i = 0; i < corrected.size(); ++i) {
      if (!corrected[i].valid || corrected[i].clamped ||
          std::abs(corrected[i].value - 5000.0) > 1e-9 * 5000.0) {
        result.passed = false;
        result.detail = "row " + std::to_string(i) + " corrected to " +
                        fmt(corrected[i].value) + ", expected 5000";
        return result;
      }
    }
  }
  result.detail = "raw spread " + fmt(raw_spread) +
                  " removed to < 1e-9 relative";
  return result;
}

CheckResult check_event_file_roundtrip(std::uint64_t seed) {
  CheckResult result{"event_file_roundtrip", true, ""};
  Rng rng = Rng::substream(seed, 400);

  EventStream t{Channel::transmitted, sorted_uniform(rng, 5000, 100.0)};
  EventStream d{Channel::reflected, sorted_uniform(rng, 4000, 100.0)};

  const auto dir = std::filesystem::temp_directory_path();
  const std::string tag = std::to_string(rng.raw());
  const auto path_a = dir / ("nhbt_selfcheck_a_" + tag + ".nevt");
  const auto path_b = dir / ("nhbt_selfcheck_b_" + tag + ".nevt");

  auto cleanup = [&] {
    std::error_code ec;
    std::filesystem::remove(path_a, ec);
    std::filesystem::remove(path_b, ec);
  };

  try {
    write_event_file(path_a.string(), t, d);
    write_event_file(path_b.string(), t, d);

    std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
    std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                        std::istreambuf_iterator<char>());
    std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                        std::istreambuf_iterator<char>());
    if (bytes_a != bytes_b || bytes_a.empty()) {
      result.passed = false;
      result.detail = "repeated writes are not byte-identical";
      cleanup();
      return result;
    }

    const auto [rt, rd] = read_event_file(path_a.string());
    cleanup();

    auto quantized_equal = [](const std::vector<double>& orig,
                              const std::vector<double>& read) {
      if (orig.size() != read.size()) return false;
      for (std::size_t i = 0; i < orig.size(); ++i) {
        const auto want = static_cast<std::uint64_t>(
            std::llround(orig[i] * 1e12));
        const auto got = static_cast<std::uint64_t>(
            std::llround(read[i] * 1e12));
        if (want != got) return false;
      }
      return true;
    };
    if (!quantized_equal(t.times_s, rt.times_s) ||
        !quantized_equal(d.times_s, rd.times_s)) {
      result.passed = false;
      result.detail = "picosecond-quantized streams differ after round-trip";
      return result;
    }
  } catch (const std::exception& e) {
    cleanup();
    result.passed = false;
    result.detail = e.what();
    return result;
  }
  result.detail = std::to_string(t.times_s.size() + d.times_s.size()) +
                  " events round-tripped bit-exactly";
  return result;
}

std::vector<CheckResult> run_selfchecks(std::uint64_t seed) {
  const CountFn production = [](std::span<const double> a,
                                std::span<const double> b, double w,
                                double off) {
    return count_coincidences(a, b, w, off);
  };
  return {
      check_oracle_equivalence(production, seed),
      check_convolution_identity(),
      check_generator_crosscheck(seed),
      check_drift_correction_inverse(seed),
      check_event_file_roundtrip(seed),
  };
}

}  // namespace nhbt
