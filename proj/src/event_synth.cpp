#include "nhbt/event_synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "nhbt/errors.hpp"
#include "nhbt/rng.hpp"

namespace nhbt {

namespace {

constexpr double kThinningMaxDensity = 0.2;  ///< rate * tau_c validity bound
constexpr double kCorrelationReach = 6.0;    ///< thinning horizon, units of tau_c
constexpr int kWalkStepsPerTimescale = 64;

/// Poisson proposals at rate `proposal_rate`, accepted with
/// drift_factor(t) * product of `correlation(t - s)` over accepted
/// predecessors s within reach. With correlation == 1 this is plain
/// (drift-modulated) Poisson sampling.
template <typename DriftFactor, typename Correlation>
std::vector<double> thinned_poisson(double proposal_rate, double duration_s,
                                    Rng& rng, DriftFactor&& drift_factor,
                                    Correlation&& correlation, double reach_s) {
  std::vector<double> accepted;
  accepted.reserve(static_cast<std::size_t>(proposal_rate * duration_s * 1.05) + 16);
  double t = rng.exponential(proposal_rate);
  while (t < duration_s) {
    double p = drift_factor(t);
    if (reach_s > 0.0) {
      for (std::size_t j = accepted.size(); j-- > 0;) {
        const double dt = t - accepted[j];
        if (dt >= reach_s) break;
        p *= correlation(dt);
      }
    }
    if (rng.uniform() < p) accepted.push_back(t);
    t += rng.exponential(proposal_rate);
  }
  return accepted;
}

}  // namespace

std::vector<std::string> DriftProfile::validate() const {
  if (!(relative_amplitude >= 0.0 && relative_amplitude <= 0.2)) {
    throw std::invalid_argument("drift relative_amplitude must be in [0, 0.2]");
  }
  if (kind != DriftKind::none && !(timescale_s > 0.0)) {
    throw std::invalid_argument("drift timescale_s must be > 0");
  }
  return {};
}

DriftModel::DriftModel(const DriftProfile& profile, std::uint64_t seed,
                       double horizon_s)
    : profile_(profile) {
  profile_.validate();
  if (profile_.kind != DriftKind::random_walk) return;

  step_s_ = profile_.timescale_s / kWalkStepsPerTimescale;
  const double amp = profile_.relative_amplitude;
  const double step_sigma = amp / 8.0;  // diffuses across the band in ~timescale
  const auto n_steps =
      static_cast<std::size_t>(std::ceil(std::max(horizon_s, 0.0) / step_s_)) + 2;
  walk_.resize(n_steps);
  walk_[0] = 1.0;
  for (std::size_t k = 1; k < n_steps; ++k) {
    // Increments come from per-index seeds, so the path does not depend on
    // query order or horizon.
    const double z = Rng(derive_seed(seed, k)).normal();
    walk_[k] = std::clamp(walk_[k - 1] + step_sigma * z, 1.0 - amp, 1.0 + amp);
  }
}

double DriftModel::multiplier(double t_s) const {
  switch (profile_.kind) {
    case DriftKind::none:
      return 1.0;
    case DriftKind::sinusoidal: {
      constexpr double two_pi = 6.283185307179586476925286766559;
      return 1.0 + profile_.relative_amplitude *
                       std::sin(two_pi * t_s / profile_.timescale_s);
    }
    case DriftKind::random_walk: {
      const double pos = std::clamp(t_s / step_s_, 0.0,
                                    static_cast<double>(walk_.size() - 1));
      const auto k = static_cast<std::size_t>(pos);
      if (k + 1 >= walk_.size()) return walk_.back();
      const double frac = pos - static_cast<double>(k);
      return walk_[k] + frac * (walk_[k + 1] - walk_[k]);
    }
  }
  return 1.0;
}

std::vector<std::string> ScanConfig::validate() const {
  if (positions_mm.empty()) {
    throw std::invalid_argument("scan positions_mm must not be empty");
  }
  std::vector<double> sorted(positions_mm);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("scan positions_mm must be distinct");
  }
  if (!(dwell_s > 0.0)) {
    throw std::invalid_argument("scan dwell_s must be > 0");
  }
  return {};
}

std::vector<SourceEvent> generate_source(const BeamParams& beam,
                                         double duration_s, std::uint64_t seed,
                                         GeneratorMode mode,
                                         const DriftModel* drift,
                                         double wall_offset_s) {
  beam.validate();
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("duration_s must be > 0");
  }
  const double rate = beam.rate_hz;
  const double tau_c = beam.coherence_time_s;
  if (mode != GeneratorMode::independent &&
      rate * tau_c > kThinningMaxDensity) {
    throw precondition_error(
        "generate_source: rate * coherence_time = " +
        std::to_string(rate * tau_c) + " exceeds " +
        std::to_string(kThinningMaxDensity) +
        "; sequential thinning is only valid at low phase-space density");
  }

  const double cap = drift ? drift->max_multiplier() : 1.0;
  const auto drift_factor = [&](double t) {
    return drift ? drift->multiplier(wall_offset_s + t) / cap : 1.0;
  };
  const double reach = kCorrelationReach * tau_c;

  std::vector<SourceEvent> events;
  switch (mode) {
    case GeneratorMode::independent: {
      Rng rng = Rng::substream(seed, 0);
      auto times = thinned_poisson(rate * cap, duration_s, rng, drift_factor,
                                   [](double) { return 1.0; }, 0.0);
      events.reserve(times.size());
      for (const double t : times) {
        events.push_back({t, rng.bernoulli(0.5) ? Spin::up : Spin::down});
      }
      break;
    }
    case GeneratorMode::spin_resolved: {
      // Two independent half-rate streams, one per spin state; exchange
      // suppression acts only between same-spin events. An unpolarized
      // merge then shows the net 1/2 dip.
      std::vector<SourceEvent> merged;
      for (int s = 0; s < 2; ++s) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(s));
        auto times = thinned_poisson(
            0.5 * rate * cap, duration_s, rng, drift_factor,
            [&](double dt) {
              return pair_correlation(dt, tau_c, SpinMode::same_spin);
            },
            reach);
        for (const double t : times) {
          merged.push_back({t, s == 0 ? Spin::up : Spin::down});
        }
      }
      std::sort(merged.begin(), merged.end(),
                [](const SourceEvent& a, const SourceEvent& b) {
                  return a.time_s < b.time_s;
                });
      events = std::move(merged);
      break;
    }
    case GeneratorMode::net_thinning: {
      Rng rng = Rng::substream(seed, 0);
      auto times = thinned_poisson(
          rate * cap, duration_s, rng, drift_factor,
          [&](double dt) {
            return pair_correlation(dt, tau_c, SpinMode::unpolarized);
          },
          reach);
      events.reserve(times.size());
      for (const double t : times) {
        events.push_back({t, rng.bernoulli(0.5) ? Spin::up : Spin::down});
      }
      break;
    }
  }
  return events;
}

std::pair<EventStream, EventStream> split_beam(
    const std::vector<SourceEvent>& events, double transmission,
    std::uint64_t seed) {
  if (!(transmission >= 0.0 && transmission <= 1.0)) {
    throw std::invalid_argument("transmission must be in [0, 1]");
  }
  EventStream t{Channel::transmitted, {}};
  EventStream d{Channel::reflected, {}};
  Rng rng(seed);
  for (const SourceEvent& ev : events) {
    (rng.bernoulli(transmission) ? t : d).times_s.push_back(ev.time_s);
  }
  return {std::move(t), std::move(d)};
}

EventStream detect(const EventStream& stream, const ApparatusParams& apparatus,
                   std::uint64_t seed) {
  if (!(apparatus.efficiency > 0.0 && apparatus.efficiency <= 1.0)) {
    throw std::invalid_argument("apparatus efficiency must be in (0, 1]");
  }
  if (apparatus.response_time_s < 0.0 || apparatus.dead_time_s < 0.0) {
    throw std::invalid_argument("apparatus times must be >= 0");
  }

  const double sigma = apparatus.response_time_s / std::sqrt(2.0);
  EventStream out{stream.channel, {}};
  out.times_s.reserve(stream.times_s.size());
  Rng rng(seed);
  for (const double t : stream.times_s) {
    if (!rng.bernoulli(apparatus.efficiency)) continue;
    const double jittered = t + sigma * rng.normal();
    out.times_s.push_back(std::max(0.0, jittered));
  }
  std::sort(out.times_s.begin(), out.times_s.end());

  if (apparatus.dead_time_s > 0.0 && !out.times_s.empty()) {
    std::vector<double> kept;
    kept.reserve(out.times_s.size());
    kept.push_back(out.times_s.front());
    for (std::size_t i = 1; i < out.times_s.size(); ++i) {
      if (out.times_s[i] - kept.back() >= apparatus.dead_time_s) {
        kept.push_back(out.times_s[i]);
      }
    }
    out.times_s = std::move(kept);
  }
  return out;
}

std::vector<ScanRow> simulate_scan(const ScanConfig& scan,
                                   const BeamParams& beam,
                                   const ApparatusParams& apparatus,
                                   const DriftProfile& drift) {
  scan.validate();
  beam.validate();
  apparatus.validate();
  drift.validate();
  if (drift.kind != DriftKind::none) {
    const double window = 2.0 * apparatus.half_window_s;
    if (drift.timescale_s < 1.0e4 * window) {
      throw precondition_error(
          "simulate_scan: drift timescale must be >= 1e4 * coincidence window "
          "for the slow-drift model to hold");
    }
  }

  const double horizon =
      static_cast<double>(scan.positions_mm.size()) * scan.dwell_s;
  const DriftModel drift_model(drift, derive_seed(scan.seed, 0xD81F7ull),
                               horizon);

  std::vector<ScanRow> rows(scan.positions_mm.size());
  for (std::size_t i = 0; i < scan.positions_mm.size(); ++i) {
    const double x = scan.positions_mm[i];
    // Substream per position keyed on the coordinate itself: without drift,
    // a position's row is independent of where it sits in the scan order.
    const std::uint64_t base =
        derive_seed(scan.seed, std::bit_cast<std::uint64_t>(x));
    const double wall = static_cast<double>(i) * scan.dwell_s;

    auto source = generate_source(beam, scan.dwell_s, derive_seed(base, 1),
                                  scan.mode, &drift_model, wall);
    auto [arm_t, arm_d] =
        split_beam(source, apparatus.transmission, derive_seed(base, 2));
    EventStream det_t = detect(arm_t, apparatus, derive_seed(base, 3));
    EventStream det_d = detect(arm_d, apparatus, derive_seed(base, 4));

    // The movable detector's extra path converts position into lag.
    const double shift = (x - scan.x0_true_mm) * 1.0e-3 / beam.speed_m_s;
    for (double& t : det_t.times_s) t += shift;

    rows[i].x_mm = x;
    rows[i].n_c = count_coincidences(det_t.times_s, det_d.times_s,
                                     apparatus.half_window_s, 0.0);
    rows[i].n_t = det_t.times_s.size();
    rows[i].n_d = det_d.times_s.size();
    rows[i].duration_s = scan.dwell_s;
  }
  return rows;
}

}  // namespace nhbt
