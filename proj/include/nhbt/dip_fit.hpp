#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nhbt/coincidence.hpp"
#include "nhbt/physics.hpp"

namespace nhbt {

/// Damped least-squares settings. Positive parameters (n_inf, tau_D, tau_c)
/// are fitted as logarithms, which enforces positivity without bound logic.
struct FitConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;  ///< relative, on the weighted gradient
  double step_tolerance = 1e-12;      ///< relative, on accepted steps
  double damping_init = 1e-3;
};

/// Parameter order in sigma / covariance: (n_inf, tau_D, tau_c, x0).
struct FitResult {
  DipModelParams params;
  std::array<double, 4> sigma{};
  std::array<std::array<double, 4>, 4> covariance{};
  double chi2_reduced = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;  ///< objective after each accepted step
};

/// Weighted fit of the coincidence-dip model to counts(x). Weights are
/// 1/max(count, 1) (Poisson variance with a floor of one). Non-convergence
/// yields converged = false; a singular normal matrix (unidentifiable data)
/// throws degenerate_fit_error. Requires at least 8 samples.
FitResult fit_dip(std::span<const double> x_mm, std::span<const double> counts,
                  double speed_m_s, const FitConfig& config = {},
                  ProfileForm form = ProfileForm::approx);

/// Convenience overload fitting raw (integer) coincidence counts.
FitResult fit_dip(const std::vector<ScanRow>& rows, double speed_m_s,
                  const FitConfig& config = {},
                  ProfileForm form = ProfileForm::approx);

/// Heuristic starting point: plateau from the upper quartile of counts, dip
/// position at the smoothed minimum, response time from the half-depth
/// width, coherence time from the observed depth. Never throws on shaped
/// data; falls back to scale-derived defaults when the data carry no dip.
DipModelParams initial_guess(std::span<const double> x_mm,
                             std::span<const double> counts,
                             double speed_m_s);

/// Reduced chi-square of params against the data with Poisson weights.
/// Requires more samples than parameters (dof >= 1).
double goodness_of_fit(std::span<const double> x_mm,
                       std::span<const double> counts,
                       const DipModelParams& params, double speed_m_s,
                       ProfileForm form);

/// Spread of fitted parameters over resampled data sets (rows drawn with
/// replacement), as a cross-check of the covariance-based sigma. Returns
/// per-parameter standard deviations in (n_inf, tau_D, tau_c, x0) order.
std::array<double, 4> bootstrap_sigma(std::span<const double> x_mm,
                                      std::span<const double> counts,
                                      double speed_m_s,
                                      const FitConfig& config = {},
                                      ProfileForm form = ProfileForm::approx,
                                      int n_resamples = 500,
                                      std::uint64_t seed = 1);

namespace detail {

/// Model value and gradient in internal coordinates
/// theta = (ln n_inf, ln tau_D, ln tau_c, x0); exposed for testing the
/// analytic Jacobian against finite differences.
double model_value(double x_mm, const std::array<double, 4>& theta,
                   double speed_m_s, ProfileForm form);
std::array<double, 4> model_gradient(double x_mm,
                                     const std::array<double, 4>& theta,
                                     double speed_m_s, ProfileForm form);

}  // namespace detail

}  // namespace nhbt
