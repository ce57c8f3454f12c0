#include "nhbt/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nhbt/errors.hpp"

namespace nhbt {

namespace {

bool is_sorted_stream(std::span<const double> s) {
  return std::is_sorted(s.begin(), s.end());
}

void require_sorted(std::span<const double> a, std::span<const double> b) {
  if (!is_sorted_stream(a) || !is_sorted_stream(b)) {
    throw std::invalid_argument("event streams must be sorted by time");
  }
}

void require_window(double half_window_s) {
  if (!(half_window_s > 0.0)) {
    throw std::invalid_argument("half_window_s must be > 0");
  }
}

}  // namespace

std::uint64_t count_coincidences(std::span<const double> a,
                                 std::span<const double> b,
                                 double half_window_s, double offset_s) {
  require_window(half_window_s);
  require_sorted(a, b);

  // For fixed t_a, the lag t_a - t_b - offset is non-increasing in t_b, so
  // the accepted pairs form a contiguous run [lo, hi) of b. Both bounds are
  // advanced with the shared predicate's own arithmetic, which keeps edge
  // behavior identical to the brute-force oracle.
  std::uint64_t n = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (const double ta : a) {
    while (lo < b.size() && ta - b[lo] - offset_s > half_window_s) ++lo;
    if (hi < lo) hi = lo;
    while (hi < b.size() && ta - b[hi] - offset_s >= -half_window_s) ++hi;
    n += hi - lo;
  }
  return n;
}

std::uint64_t brute_force_count(std::span<const double> a,
                                std::span<const double> b,
                                double half_window_s, double offset_s) {
  require_window(half_window_s);
  std::uint64_t n = 0;
  for (const double ta : a) {
    for (const double tb : b) {
      n += pair_in_window(ta, tb, half_window_s, offset_s) ? 1 : 0;
    }
  }
  return n;
}

LagHistogram lag_histogram(std::span<const double> a, std::span<const double> b,
                           double max_lag_s, int bins) {
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  require_window(max_lag_s);
  require_sorted(a, b);

  LagHistogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  h.bin_edges_s.resize(static_cast<std::size_t>(bins) + 1);
  const double width = 2.0 * max_lag_s / bins;
  for (int i = 0; i <= bins; ++i) {
    h.bin_edges_s[static_cast<std::size_t>(i)] = -max_lag_s + width * i;
  }

  std::size_t lo = 0;
  std::size_t hi = 0;
  for (const double ta : a) {
    while (lo < b.size() && ta - b[lo] > max_lag_s) ++lo;
    if (hi < lo) hi = lo;
    while (hi < b.size() && ta - b[hi] >= -max_lag_s) ++hi;
    for (std::size_t j = lo; j < hi; ++j) {
      const double lag = ta - b[j];
      auto bin = static_cast<std::size_t>((lag + max_lag_s) / width);
      if (bin >= h.counts.size()) bin = h.counts.size() - 1;  // lag == +max_lag
      ++h.counts[bin];
      ++h.total_pairs;
    }
  }
  return h;
}

std::vector<double> normalized_lag_profile(const LagHistogram& h,
                                           double rate_a_hz, double rate_b_hz,
                                           double duration_s) {
  const double expectation = rate_a_hz * rate_b_hz * duration_s * h.bin_width_s();
  if (!(expectation > 0.0)) {
    throw std::invalid_argument("flat pair expectation must be > 0");
  }
  std::vector<double> g(h.counts.size());
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    g[i] = static_cast<double>(h.counts[i]) / expectation;
  }
  return g;
}

std::vector<CorrectedCount> drift_correct(std::span<const ScanRow> rows,
                                          DriftReference reference,
                                          std::size_t block_size) {
  if (rows.empty()) throw std::invalid_argument("drift_correct: no rows");
  if (reference == DriftReference::per_block_mean && block_size < 1) {
    throw std::invalid_argument("drift_correct: block_size must be >= 1");
  }

  const auto block_of = [&](std::size_t i) {
    return reference == DriftReference::global_mean ? std::size_t{0}
                                                    : i / block_size;
  };
  const std::size_t n_blocks = block_of(rows.size() - 1) + 1;
  std::vector<double> mean_t(n_blocks, 0.0);
  std::vector<double> mean_d(n_blocks, 0.0);
  std::vector<std::size_t> block_n(n_blocks, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t blk = block_of(i);
    mean_t[blk] += static_cast<double>(rows[i].n_t);
    mean_d[blk] += static_cast<double>(rows[i].n_d);
    ++block_n[blk];
  }
  for (std::size_t blk = 0; blk < n_blocks; ++blk) {
    mean_t[blk] /= static_cast<double>(block_n[blk]);
    mean_d[blk] /= static_cast<double>(block_n[blk]);
    if (!(mean_t[blk] > 0.0) || !(mean_d[blk] > 0.0)) {
      throw std::invalid_argument("drift_correct: reference means must be > 0");
    }
  }

  std::vector<CorrectedCount> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t blk = block_of(i);
    const double dt = (static_cast<double>(rows[i].n_t) - mean_t[blk]) / mean_t[blk];
    const double dd = (static_cast<double>(rows[i].n_d) - mean_d[blk]) / mean_d[blk];
    const double denom = 1.0 + dt + dd;
    CorrectedCount& c = out[i];
    c.valid = denom > 0.0;
    c.clamped = denom < 0.5;
    c.value = static_cast<double>(rows[i].n_c) / std::max(denom, 0.5);
  }
  return out;
}

double accidental_estimate(std::span<const double> a, std::span<const double> b,
                           double half_window_s, double far_offset_s,
                           double correlation_scale_s) {
  if (!(correlation_scale_s >= 0.0)) {
    throw std::invalid_argument("correlation_scale_s must be >= 0");
  }
  const double min_offset = 10.0 * correlation_scale_s + half_window_s;
  if (!(std::abs(far_offset_s) > min_offset)) {
    throw precondition_error(
        "accidental_estimate: |far_offset| = " + std::to_string(far_offset_s) +
        " s is inside the correlation range (need > " +
        std::to_string(min_offset) + " s)");
  }
  const double plus = static_cast<double>(
      count_coincidences(a, b, half_window_s, far_offset_s));
  const double minus = static_cast<double>(
      count_coincidences(a, b, half_window_s, -far_offset_s));
  return 0.5 * (plus + minus);
}

}  // namespace nhbt
