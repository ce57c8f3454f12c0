#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nhbt {

/// One scan position: raw coincidence and singles counts over one dwell.
struct ScanRow {
  double x_mm = 0.0;
  std::uint64_t n_c = 0;  ///< coincidences
  std::uint64_t n_t = 0;  ///< singles, transmitted arm
  std::uint64_t n_d = 0;  ///< singles, reflected arm
  double duration_s = 0.0;
};

/// Shared pair predicate: |t_a - t_b - offset| <= half_window, closed at the
/// edges. Both the sweep counter and the brute-force oracle evaluate exactly
/// this expression.
inline bool pair_in_window(double t_a, double t_b, double half_window_s,
                           double offset_s) {
  const double lag = t_a - t_b - offset_s;
  return lag <= half_window_s && lag >= -half_window_s;
}

/// Counts pairs (t_a, t_b) with |t_a - t_b - offset| <= half_window using a
/// sorted two-pointer sweep, O(|a| + |b|) plus output. Throws
/// std::invalid_argument if either stream is unsorted.
std::uint64_t count_coincidences(std::span<const double> a,
                                 std::span<const double> b,
                                 double half_window_s, double offset_s);

/// O(N^2) double loop over all pairs with the same predicate; ground truth
/// for count_coincidences.
std::uint64_t brute_force_count(std::span<const double> a,
                                std::span<const double> b,
                                double half_window_s, double offset_s);

/// Histogram of pair lags t_a - t_b over [-max_lag, +max_lag].
struct LagHistogram {
  std::vector<double> bin_edges_s;       ///< uniform, size bins + 1
  std::vector<std::uint64_t> counts;     ///< size bins
  std::uint64_t total_pairs = 0;

  double bin_width_s() const { return bin_edges_s[1] - bin_edges_s[0]; }
  double bin_center_s(std::size_t i) const {
    return 0.5 * (bin_edges_s[i] + bin_edges_s[i + 1]);
  }
};

LagHistogram lag_histogram(std::span<const double> a, std::span<const double> b,
                           double max_lag_s, int bins);

/// Divides each bin by the flat accidental expectation
/// rate_a * rate_b * duration * bin_width, estimating the pair correlation
/// g at each lag.
std::vector<double> normalized_lag_profile(const LagHistogram& h,
                                           double rate_a_hz, double rate_b_hz,
                                           double duration_s);

enum class DriftReference {
  global_mean,     ///< singles means over the whole scan
  per_block_mean,  ///< singles means over consecutive row blocks
};

/// Drift-corrected coincidence count for one row.
struct CorrectedCount {
  double value = 0.0;
  bool clamped = false;  ///< denominator fell below 0.5 (fluctuations not small)
  bool valid = true;     ///< denominator was positive before clamping
};

/// Removes slow beam-intensity drift from raw coincidence counts by dividing
/// each row by 1 + (N_t - mean_t)/mean_t + (N_d - mean_d)/mean_d. The
/// denominator is clamped to >= 0.5; rows whose raw denominator was
/// non-positive are flagged invalid.
std::vector<CorrectedCount> drift_correct(
    std::span<const ScanRow> rows,
    DriftReference reference = DriftReference::global_mean,
    std::size_t block_size = 8);

/// Accidental-rate estimator: mean coincidence count at +-far_offset, where
/// pair correlations have died out. correlation_scale must be the largest
/// correlation scale in the data (max of response and coherence time);
/// offsets closer than 10 * correlation_scale + half_window are refused.
double accidental_estimate(std::span<const double> a, std::span<const double> b,
                           double half_window_s, double far_offset_s,
                           double correlation_scale_s);

}  // namespace nhbt
