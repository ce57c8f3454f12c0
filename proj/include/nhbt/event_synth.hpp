#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nhbt/coincidence.hpp"
#include "nhbt/physics.hpp"

namespace nhbt {

enum class Spin : std::uint8_t { up = 0, down = 1 };

/// One emission at the source, before splitting and detection.
struct SourceEvent {
  double time_s = 0.0;
  Spin spin = Spin::up;
};

enum class Channel : std::uint8_t {
  transmitted = 0,  ///< D1, movable detector
  reflected = 1,    ///< D2, fixed detector
};

/// Time-ordered detection timestamps for one arm. Spins are not carried:
/// the detectors are spin-blind.
struct EventStream {
  Channel channel = Channel::transmitted;
  std::vector<double> times_s;
};

enum class GeneratorMode {
  independent,    ///< homogeneous Poisson, no correlations
  spin_resolved,  ///< two half-rate spin streams, same-spin thinning
  net_thinning,   ///< single stream thinned by the net pair correlation
};

enum class DriftKind { none, sinusoidal, random_walk };

/// Slow source-intensity drift, multiplying the instantaneous rate.
struct DriftProfile {
  DriftKind kind = DriftKind::none;
  double relative_amplitude = 0.0;  ///< in [0, 0.2]
  double timescale_s = 1.0;

  std::vector<std::string> validate() const;
};

/// Evaluates the instantaneous rate multiplier of a drift profile. The
/// random-walk path is precomputed up to a horizon from per-index seeds, so
/// multiplier(t) is a pure function of (profile, seed, t) and safe to query
/// concurrently.
class DriftModel {
 public:
  DriftModel(const DriftProfile& profile, std::uint64_t seed,
             double horizon_s = 0.0);

  /// Instantaneous rate multiplier, in [1 - amplitude, 1 + amplitude].
  double multiplier(double t_s) const;

  double max_multiplier() const {
    return 1.0 + profile_.relative_amplitude;
  }

 private:
  DriftProfile profile_;
  std::vector<double> walk_;  ///< random-walk values on the step grid
  double step_s_ = 0.0;
};

/// Full position scan: detector positions, true dip location, dwell per
/// position, and the generator choice.
struct ScanConfig {
  std::vector<double> positions_mm;
  double x0_true_mm = 0.0;
  double dwell_s = 0.0;
  std::uint64_t seed = 0;
  GeneratorMode mode = GeneratorMode::spin_resolved;

  std::vector<std::string> validate() const;
};

/// Generates source events over [0, duration). Antibunched modes build a
/// Poisson proposal stream and accept each candidate with the product of
/// pair correlations against already-accepted events within 6 tau_c; they
/// require rate * tau_c <= 0.2, where the low-density thinning approximation
/// holds. An optional drift model modulates the rate, with wall_offset_s
/// locating this stretch of data on the drift's time axis.
std::vector<SourceEvent> generate_source(const BeamParams& beam,
                                         double duration_s, std::uint64_t seed,
                                         GeneratorMode mode,
                                         const DriftModel* drift = nullptr,
                                         double wall_offset_s = 0.0);

/// Sends each event to the transmitted arm with probability transmission,
/// else to the reflected arm. Spins are dropped here.
std::pair<EventStream, EventStream> split_beam(
    const std::vector<SourceEvent>& events, double transmission,
    std::uint64_t seed);

/// Detector response: keeps each event with probability efficiency, jitters
/// kept timestamps by a zero-mean Gaussian of width response_time / sqrt(2)
/// (so the two-detector lag spread is the full response time), applies dead
/// time, and re-sorts. Timestamps are clamped at zero.
EventStream detect(const EventStream& stream, const ApparatusParams& apparatus,
                   std::uint64_t seed);

/// Runs the whole scan: per position, generate -> split -> detect -> shift
/// the movable arm by (x - x0_true)/v -> count coincidences. Each position
/// draws from an independent substream of scan.seed, so rows do not depend
/// on evaluation order.
std::vector<ScanRow> simulate_scan(const ScanConfig& scan,
                                   const BeamParams& beam,
                                   const ApparatusParams& apparatus,
                                   const DriftProfile& drift);

}  // namespace nhbt
