#include "nhbt/physics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nhbt {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be > 0");
  }
}

}  // namespace

std::vector<std::string> BeamParams::validate() const {
  require_positive(rate_hz, "beam rate_hz");
  require_positive(speed_m_s, "beam speed_m_s");
  require_positive(energy_mev, "beam energy_mev");
  require_positive(energy_spread_ev, "beam energy_spread_ev");
  require_positive(coherence_time_s, "beam coherence_time_s");

  std::vector<std::string> warnings;
  const double bound = coherence_time_from_energy_spread(energy_spread_ev);
  if (coherence_time_s < bound) {
    warnings.push_back(
        "coherence_time_s is below hbar/(2 dE) = " + std::to_string(bound) +
        " s implied by energy_spread_ev");
  }
  return warnings;
}

std::vector<std::string> ApparatusParams::validate() const {
  if (!(transmission > 0.0 && transmission < 1.0)) {
    throw std::invalid_argument("apparatus transmission must be in (0, 1)");
  }
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("apparatus efficiency must be in (0, 1]");
  }
  require_positive(response_time_s, "apparatus response_time_s");
  require_positive(half_window_s, "apparatus half_window_s");
  if (dead_time_s < 0.0) {
    throw std::invalid_argument("apparatus dead_time_s must be >= 0");
  }

  std::vector<std::string> warnings;
  if (half_window_s < response_time_s) {
    warnings.push_back("half_window_s < response_time_s: window clips the response");
  }
  return warnings;
}

std::vector<std::string> DipModelParams::validate() const {
  require_positive(n_inf, "dip n_inf");
  require_positive(tau_d_s, "dip tau_d_s");
  require_positive(tau_c_s, "dip tau_c_s");

  std::vector<std::string> warnings;
  if (tau_c_s > tau_d_s) {
    warnings.push_back(
        "tau_c_s > tau_d_s: dip depth exceeds 1/2, outside the wide-response regime");
  }
  return warnings;
}

double pair_correlation(double t_s, double tau_c_s, SpinMode mode) {
  require_positive(tau_c_s, "tau_c_s");
  const double z = t_s / tau_c_s;
  const double suppression = std::exp(-0.5 * z * z);
  return mode == SpinMode::unpolarized ? 1.0 - 0.5 * suppression
                                       : 1.0 - suppression;
}

double response_density(double t_s, double tau_d_s) {
  require_positive(tau_d_s, "tau_d_s");
  const double z = t_s / tau_d_s;
  constexpr double inv_sqrt_two_pi = 0.39894228040143267794;
  return inv_sqrt_two_pi / tau_d_s * std::exp(-0.5 * z * z);
}

double dip_depth(double tau_c_s, double tau_d_s) {
  require_positive(tau_c_s, "tau_c_s");
  require_positive(tau_d_s, "tau_d_s");
  return tau_c_s / (2.0 * tau_d_s);
}

double expected_profile(double t_s, const DipModelParams& p, ProfileForm form) {
  p.validate();
  if (form == ProfileForm::approx) {
    const double z = t_s / p.tau_d_s;
    return p.n_inf * (1.0 - dip_depth(p.tau_c_s, p.tau_d_s) * std::exp(-0.5 * z * z));
  }
  // Convolving the Gaussian response (width tau_D) with the pair correlation
  // (width tau_c) combines the widths in quadrature and rescales the depth.
  const double sigma = std::hypot(p.tau_c_s, p.tau_d_s);
  const double z = t_s / sigma;
  return p.n_inf * (1.0 - 0.5 * (p.tau_c_s / sigma) * std::exp(-0.5 * z * z));
}

double accidental_count(double tau_s, double rate_t_hz, double rate_d_hz,
                        double duration_s) {
  return tau_s * rate_t_hz * rate_d_hz * duration_s;
}

double antibunching_deficit(double tau_c_s, double rate_t_hz, double rate_d_hz,
                            double duration_s) {
  return 0.5 * tau_c_s * rate_t_hz * rate_d_hz * duration_s;
}

double noise_to_signal(double tau_d_s, double tau_c_s, double rate_t_hz,
                       double rate_d_hz, double duration_s) {
  require_positive(tau_d_s, "tau_d_s");
  require_positive(tau_c_s, "tau_c_s");
  require_positive(rate_t_hz, "rate_t_hz");
  require_positive(rate_d_hz, "rate_d_hz");
  require_positive(duration_s, "duration_s");
  return 2.0 * std::sqrt(tau_d_s) /
         (tau_c_s * std::sqrt(rate_t_hz * rate_d_hz * duration_s));
}

double required_measurement_time(double target_ratio, double tau_d_s,
                                 double tau_c_s, double rate_t_hz,
                                 double rate_d_hz) {
  require_positive(target_ratio, "target_ratio");
  require_positive(tau_d_s, "tau_d_s");
  require_positive(tau_c_s, "tau_c_s");
  require_positive(rate_t_hz, "rate_t_hz");
  require_positive(rate_d_hz, "rate_d_hz");
  return 4.0 * tau_d_s /
         (target_ratio * target_ratio * tau_c_s * tau_c_s * rate_t_hz * rate_d_hz);
}

double coherence_time_from_energy_spread(double energy_spread_ev) {
  require_positive(energy_spread_ev, "energy_spread_ev");
  return PhysConstants::hbar_ev_s / (2.0 * energy_spread_ev);
}

double coherence_length_m(double speed_m_s, double coherence_time_s) {
  require_positive(speed_m_s, "speed_m_s");
  require_positive(coherence_time_s, "coherence_time_s");
  return speed_m_s * coherence_time_s;
}

}  // namespace nhbt
