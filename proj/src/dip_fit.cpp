#include "nhbt/dip_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nhbt/errors.hpp"
#include "nhbt/rng.hpp"

namespace nhbt {

namespace {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

/// In-place Cholesky solve of A x = b for symmetric positive definite A.
/// Returns false if a pivot is not strictly positive.
bool cholesky_solve(Mat4 a, Vec4 b, Vec4& x) {
  for (int j = 0; j < 4; ++j) {
    double d = a[j][j];
    for (int k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > 0.0)) return false;
    a[j][j] = std::sqrt(d);
    for (int i = j + 1; i < 4; ++i) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  for (int i = 0; i < 4; ++i) {  // L y = b
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a[i][k] * b[k];
    b[i] = s / a[i][i];
  }
  for (int i = 3; i >= 0; --i) {  // L^T x = y
    double s = b[i];
    for (int k = i + 1; k < 4; ++k) s -= a[k][i] * x[k];
    x[i] = s / a[i][i];
  }
  return true;
}

/// Inverse of a symmetric positive definite matrix via Cholesky on the
/// canonical basis.
bool invert_spd(const Mat4& a, Mat4& inv) {
  for (int c = 0; c < 4; ++c) {
    Vec4 e{};
    e[c] = 1.0;
    Vec4 col;
    if (!cholesky_solve(a, e, col)) return false;
    for (int r = 0; r < 4; ++r) inv[r][c] = col[r];
  }
  for (int r = 0; r < 4; ++r) {  // symmetrize against round-off
    for (int c = r + 1; c < 4; ++c) {
      const double v = 0.5 * (inv[r][c] + inv[c][r]);
      inv[r][c] = inv[c][r] = v;
    }
  }
  return true;
}

double weight_of(double count) { return 1.0 / std::max(count, 1.0); }

double objective(std::span<const double> x, std::span<const double> counts,
                 const Vec4& theta, double v, ProfileForm form) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = counts[i] - detail::model_value(x[i], theta, v, form);
    s += weight_of(counts[i]) * r * r;
  }
  return s;
}

Vec4 to_theta(const DipModelParams& p) {
  return {std::log(p.n_inf), std::log(p.tau_d_s), std::log(p.tau_c_s),
          p.x0_mm};
}

DipModelParams from_theta(const Vec4& theta) {
  DipModelParams p;
  p.n_inf = std::exp(theta[0]);
  p.tau_d_s = std::exp(theta[1]);
  p.tau_c_s = std::exp(theta[2]);
  p.x0_mm = theta[3];
  return p;
}

}  // namespace

namespace detail {

double model_value(double x_mm, const Vec4& theta, double speed_m_s,
                   ProfileForm form) {
  const DipModelParams p = from_theta(theta);
  const double t = (x_mm - p.x0_mm) * 1.0e-3 / speed_m_s;
  return expected_profile(t, p, form);
}

std::array<double, 4> model_gradient(double x_mm, const Vec4& theta,
                                     double speed_m_s, ProfileForm form) {
  const double a = std::exp(theta[0]);
  const double tau_d = std::exp(theta[1]);
  const double tau_c = std::exp(theta[2]);
  const double k = 1.0e-3 / speed_m_s;  // mm of travel per second of lag
  const double t = (x_mm - theta[3]) * k;

  if (form == ProfileForm::approx) {
    const double u = t / tau_d;
    const double e = std::exp(-0.5 * u * u);
    const double b = a * (tau_c / (2.0 * tau_d)) * e;  // dip term
    return {
        a - b,              // d/d ln n_inf (= model value)
        -b * (u * u - 1.0), // d/d ln tau_D
        -b,                 // d/d ln tau_c
        -b * u * k / tau_d, // d/d x0
    };
  }
  const double s2 = tau_c * tau_c + tau_d * tau_d;
  const double fc = tau_c * tau_c / s2;
  const double fd = tau_d * tau_d / s2;
  const double u2 = t * t / s2;
  const double e = std::exp(-0.5 * u2);
  const double b = a * (0.5 * tau_c / std::sqrt(s2)) * e;
  return {
      a - b,
      -b * fd * (u2 - 1.0),
      -b * (fd + u2 * fc),
      -b * t * k / s2,
  };
}

}  // namespace detail

DipModelParams initial_guess(std::span<const double> x_mm,
                             std::span<const double> counts,
                             double speed_m_s) {
  if (x_mm.size() != counts.size()) {
    throw std::invalid_argument("initial_guess: size mismatch");
  }
  const std::size_t n = x_mm.size();
  if (n < 8) throw std::invalid_argument("initial_guess: need >= 8 samples");
  if (!(speed_m_s > 0.0)) {
    throw std::invalid_argument("initial_guess: speed must be > 0");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return x_mm[i] < x_mm[j]; });

  std::vector<double> xs(n), cs(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x_mm[order[i]];
    cs[i] = counts[order[i]];
  }

  // Plateau: mean of the upper quartile of counts.
  std::vector<double> sorted_counts(cs);
  std::sort(sorted_counts.begin(), sorted_counts.end(), std::greater<>());
  const std::size_t quart = std::max<std::size_t>(1, n / 4);
  double n_inf =
      std::accumulate(sorted_counts.begin(), sorted_counts.begin() + quart,
                      0.0) /
      static_cast<double>(quart);
  if (!(n_inf > 0.0)) n_inf = 1.0;

  // Dip position: minimum of the 3-point moving average.
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 < n ? i + 1 : n - 1;
    smooth[i] = (cs[lo] + cs[i] + cs[hi]) / 3.0;
  }
  const std::size_t imin =
      std::min_element(smooth.begin(), smooth.end()) - smooth.begin();
  const double x0 = xs[imin];
  const double c_min = smooth[imin];

  // Width: half-width at half depth of the smoothed dip, one side at a
  // time; linear interpolation between brackets.
  const double level = 0.5 * (n_inf + c_min);
  double left = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = imin; i-- > 0;) {
    if (smooth[i] >= level) {
      const double f =
          (smooth[i] - level) / std::max(smooth[i] - smooth[i + 1], 1e-300);
      left = x0 - (xs[i] + f * (xs[i + 1] - xs[i]));
      break;
    }
  }
  double right = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = imin + 1; i < n; ++i) {
    if (smooth[i] >= level) {
      const double f =
          (level - smooth[i - 1]) / std::max(smooth[i] - smooth[i - 1], 1e-300);
      right = xs[i - 1] + f * (xs[i] - xs[i - 1]) - x0;
      break;
    }
  }
  const double span = xs.back() - xs.front();
  double hwhd_mm;
  if (std::isfinite(left) && std::isfinite(right)) {
    hwhd_mm = 0.5 * (left + right);
  } else if (std::isfinite(left)) {
    hwhd_mm = left;
  } else if (std::isfinite(right)) {
    hwhd_mm = right;
  } else {
    hwhd_mm = span / 8.0;
  }
  if (!(hwhd_mm > 0.0)) hwhd_mm = std::max(span / 8.0, 1e-6);

  DipModelParams guess;
  guess.n_inf = n_inf;
  guess.tau_d_s = hwhd_mm * 1.0e-3 / speed_m_s;
  const double depth = std::clamp(1.0 - c_min / n_inf, 1e-4, 0.5);
  guess.tau_c_s = 2.0 * guess.tau_d_s * depth;
  guess.x0_mm = x0;
  return guess;
}

double goodness_of_fit(std::span<const double> x_mm,
                       std::span<const double> counts,
                       const DipModelParams& params, double speed_m_s,
                       ProfileForm form) {
  if (x_mm.size() != counts.size()) {
    throw std::invalid_argument("goodness_of_fit: size mismatch");
  }
  if (x_mm.size() < 5) {
    throw std::invalid_argument(
        "goodness_of_fit: need at least one degree of freedom (5 samples)");
  }
  params.validate();
  const Vec4 theta = to_theta(params);
  const double s = objective(x_mm, counts, theta, speed_m_s, form);
  return s / static_cast<double>(x_mm.size() - 4);
}

FitResult fit_dip(std::span<const double> x_mm, std::span<const double> counts,
                  double speed_m_s, const FitConfig& config, ProfileForm form) {
  const std::size_t n = x_mm.size();
  if (n != counts.size()) {
    throw std::invalid_argument("fit_dip: size mismatch");
  }
  if (n < 8) throw std::invalid_argument("fit_dip: need >= 8 samples");
  if (!(speed_m_s > 0.0)) {
    throw std::invalid_argument("fit_dip: speed must be > 0");
  }
  if (!(config.gradient_tolerance > 0.0) || !(config.step_tolerance > 0.0) ||
      !(config.damping_init > 0.0) || config.max_iterations < 1) {
    throw std::invalid_argument("fit_dip: invalid FitConfig");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x_mm[i]) || !std::isfinite(counts[i]) ||
        counts[i] < 0.0) {
      throw std::invalid_argument(
          "fit_dip: samples must be finite with non-negative counts");
    }
  }

  Vec4 theta = to_theta(initial_guess(x_mm, counts, speed_m_s));
  double s = objective(x_mm, counts, theta, speed_m_s, form);

  FitResult result;
  result.objective_history.push_back(s);

  double lambda = config.damping_init;
  constexpr double kLambdaMax = 1e14;
  bool converged = false;
  int iter = 0;
  Mat4 hessian{};

  for (; iter < config.max_iterations && !converged; ++iter) {
    Mat4 h{};
    Vec4 g{};
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weight_of(counts[i]);
      const double r =
          counts[i] - detail::model_value(x_mm[i], theta, speed_m_s, form);
      const Vec4 j = detail::model_gradient(x_mm[i], theta, speed_m_s, form);
      for (int a = 0; a < 4; ++a) {
        g[a] += w * j[a] * r;
        for (int b = a; b < 4; ++b) h[a][b] += w * j[a] * j[b];
      }
    }
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < a; ++b) h[a][b] = h[b][a];
      if (!std::isfinite(g[a]) || !std::isfinite(h[a][a])) {
        throw degenerate_fit_error("fit_dip: non-finite normal equations");
      }
    }
    hessian = h;

    double gmax = 0.0;
    for (int a = 0; a < 4; ++a) gmax = std::max(gmax, std::abs(g[a]));
    if (gmax <= config.gradient_tolerance * std::max(1.0, s)) {
      converged = true;
      break;
    }

    // Try damped steps, inflating lambda until one reduces the objective.
    bool accepted = false;
    while (lambda <= kLambdaMax) {
      Mat4 damped = h;
      for (int a = 0; a < 4; ++a) {
        damped[a][a] += lambda * std::max(h[a][a], 1e-300);
      }
      Vec4 delta;
      if (!cholesky_solve(damped, g, delta)) {
        lambda *= 10.0;
        continue;
      }
      Vec4 trial = theta;
      for (int a = 0; a < 4; ++a) trial[a] += delta[a];
      // Keep log-parameters inside a sane exp() range.
      for (int a = 0; a < 3; ++a) trial[a] = std::clamp(trial[a], -300.0, 300.0);
      const double s_trial = objective(x_mm, counts, trial, speed_m_s, form);
      if (std::isfinite(s_trial) && s_trial <= s) {
        double step = 0.0;
        for (int a = 0; a < 4; ++a) {
          step = std::max(step,
                          std::abs(delta[a]) / std::max(1.0, std::abs(theta[a])));
        }
        theta = trial;
        const double improvement = s - s_trial;
        s = s_trial;
        result.objective_history.push_back(s);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (step <= config.step_tolerance ||
            improvement <= config.step_tolerance * std::max(1.0, s)) {
          converged = true;
        }
        break;
      }
      lambda *= 7.0;
    }
    if (!accepted) {
      // Damping is saturated: either we are at a (possibly flat) optimum or
      // the data do not constrain the model.
      Mat4 test;
      if (!invert_spd(h, test)) {
        throw degenerate_fit_error(
            "fit_dip: singular normal matrix; data do not identify the model");
      }
      converged = gmax <= std::sqrt(config.gradient_tolerance) *
                              std::max(1.0, s);
      break;
    }
  }

  result.iterations = iter;
  result.converged = converged;
  result.params = from_theta(theta);
  result.chi2_reduced = s / static_cast<double>(n - 4);

  Mat4 cov_theta;
  if (!invert_spd(hessian, cov_theta)) {
    throw degenerate_fit_error(
        "fit_dip: singular normal matrix at the optimum");
  }
  // Transform from (ln n_inf, ln tau_D, ln tau_c, x0) to physical units.
  const Vec4 scale{result.params.n_inf, result.params.tau_d_s,
                   result.params.tau_c_s, 1.0};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      result.covariance[a][b] = scale[a] * scale[b] * cov_theta[a][b];
    }
  }
  for (int a = 0; a < 4; ++a) {
    result.sigma[a] = std::sqrt(std::max(result.covariance[a][a], 0.0));
  }
  result.params.sigma = DipModelParams::Uncertainties{
      result.sigma[0], result.sigma[1], result.sigma[2], result.sigma[3]};
  return result;
}

FitResult fit_dip(const std::vector<ScanRow>& rows, double speed_m_s,
                  const FitConfig& config, ProfileForm form) {
  std::vector<double> x(rows.size()), c(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x[i] = rows[i].x_mm;
    c[i] = static_cast<double>(rows[i].n_c);
  }
  return fit_dip(x, c, speed_m_s, config, form);
}

std::array<double, 4> bootstrap_sigma(std::span<const double> x_mm,
                                      std::span<const double> counts,
                                      double speed_m_s,
                                      const FitConfig& config,
                                      ProfileForm form, int n_resamples,
                                      std::uint64_t seed) {
  const std::size_t n = x_mm.size();
  if (n != counts.size()) {
    throw std::invalid_argument("bootstrap_sigma: size mismatch");
  }
  if (n < 8) throw std::invalid_argument("bootstrap_sigma: need >= 8 samples");
  if (n_resamples < 2) {
    throw std::invalid_argument("bootstrap_sigma: need >= 2 resamples");
  }

  std::array<double, 4> sum{};
  std::array<double, 4> sum_sq{};
  int successes = 0;
  std::vector<double> rx(n), rc(n);
  for (int rep = 0; rep < n_resamples; ++rep) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(rep));
    for (std::size_t i = 0; i < n; ++i) {
      const auto pick =
          static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
      const std::size_t idx = std::min(pick, n - 1);
      rx[i] = x_mm[idx];
      rc[i] = counts[idx];
    }
    try {
      const FitResult fit = fit_dip(rx, rc, speed_m_s, config, form);
      if (!fit.converged) continue;
      const Vec4 p{fit.params.n_inf, fit.params.tau_d_s, fit.params.tau_c_s,
                   fit.params.x0_mm};
      for (int a = 0; a < 4; ++a) {
        sum[a] += p[a];
        sum_sq[a] += p[a] * p[a];
      }
      ++successes;
    } catch (const degenerate_fit_error&) {
      continue;
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
  if (successes < n_resamples / 2 || successes < 2) {
    throw degenerate_fit_error(
        "bootstrap_sigma: too few resamples produced a usable fit (" +
        std::to_string(successes) + "/" + std::to_string(n_resamples) + ")");
  }
  std::array<double, 4> out{};
  const double m = static_cast<double>(successes);
  for (int a = 0; a < 4; ++a) {
    const double mean = sum[a] / m;
    const double var = std::max(0.0, sum_sq[a] / m - mean * mean);
    out[a] = std::sqrt(var * m / (m - 1.0));
  }
  return out;
}

}  // namespace nhbt
