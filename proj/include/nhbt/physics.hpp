#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace nhbt {

/// Physical constants. Energies are carried in eV throughout the model
/// layer; unit prefixes (meV, ueV) are resolved at the config boundary.
struct PhysConstants {
  static constexpr double hbar_ev_s = 6.582119569e-16;  // CODATA, eV s
};

/// Source beam description: rate, speed and the energy spread that sets the
/// wave-packet coherence time.
struct BeamParams {
  double rate_hz = 2000.0;            ///< total source rate n
  double speed_m_s = 630.0;           ///< particle speed v
  double energy_mev = 2.08;           ///< beam energy, informational only
  double energy_spread_ev = 0.13e-6;  ///< energy spread dE
  /// coherence time tau_c; default is hbar / (2 dE) for the default spread
  double coherence_time_s = 6.582119569e-16 / (2.0 * 0.13e-6);

  /// Throws std::invalid_argument on hard violations (non-positive fields);
  /// returns warnings for soft ones (coherence time above the hbar/2dE bound
  /// is fine, below it is flagged).
  std::vector<std::string> validate() const;
};

/// Splitter, detectors and coincidence electronics.
struct ApparatusParams {
  double transmission = 0.5;          ///< splitter transmission p_t
  double efficiency = 1.0;            ///< detection probability per detector
  double response_time_s = 0.33e-6;   ///< apparatus response time tau_D
  double half_window_s = 0.8e-6;      ///< coincidence acceptance half-width
  double dead_time_s = 0.0;           ///< per-detector dead time

  double rate_transmitted(double beam_rate_hz) const {
    return transmission * beam_rate_hz;
  }
  double rate_reflected(double beam_rate_hz) const {
    return (1.0 - transmission) * beam_rate_hz;
  }

  std::vector<std::string> validate() const;
};

/// Parameters of the coincidence-dip model: plateau count, response time,
/// coherence time and dip position. Uncertainties are attached by the
/// fitter.
struct DipModelParams {
  double n_inf = 0.0;    ///< plateau coincidence count
  double tau_d_s = 0.0;  ///< response time
  double tau_c_s = 0.0;  ///< coherence time
  double x0_mm = 0.0;    ///< dip position

  struct Uncertainties {
    double n_inf = 0.0;
    double tau_d_s = 0.0;
    double tau_c_s = 0.0;
    double x0_mm = 0.0;
  };
  std::optional<Uncertainties> sigma;

  std::vector<std::string> validate() const;
};

enum class SpinMode {
  unpolarized,  ///< net pair correlation, 1/2 suppression at zero lag
  same_spin     ///< full exchange suppression at zero lag
};

enum class ProfileForm {
  approx,  ///< wide-response closed form, valid for tau_D >> tau_c
  exact    ///< exact Gaussian-Gaussian convolution
};

/// Pair correlation at emission-time separation t. Unpolarized beams carry
/// a net 1/2 suppression (three antibunched triplet states against one
/// bunched singlet); same-spin pairs are fully suppressed at zero lag.
double pair_correlation(double t_s, double tau_c_s, SpinMode mode);

/// Normalized Gaussian response density of the whole apparatus.
double response_density(double t_s, double tau_d_s);

/// Relative dip depth tau_c / (2 tau_D).
double dip_depth(double tau_c_s, double tau_d_s);

/// Expected coincidence counts at detection-lag t for the dip model.
/// ProfileForm::approx is the wide-response limit; ProfileForm::exact is
/// the full convolution of the response density with the pair correlation.
double expected_profile(double t_s, const DipModelParams& p, ProfileForm form);

/// Accidental coincidences tau * n_t * n_d * T0 for an effective window tau.
double accidental_count(double tau_s, double rate_t_hz, double rate_d_hz,
                        double duration_s);

/// Magnitude of the antibunching reduction, (1/2) tau_c * n_t * n_d * T0.
double antibunching_deficit(double tau_c_s, double rate_t_hz, double rate_d_hz,
                            double duration_s);

/// rms fluctuation of the accidental count over the antibunching deficit:
/// 2 sqrt(tau_D) / (tau_c sqrt(n_t n_d T0)). Below one means the dip is
/// resolvable.
double noise_to_signal(double tau_d_s, double tau_c_s, double rate_t_hz,
                       double rate_d_hz, double duration_s);

/// Measuring time needed to reach a target noise-to-signal ratio;
/// exact algebraic inverse of noise_to_signal in T0.
double required_measurement_time(double target_ratio, double tau_d_s,
                                 double tau_c_s, double rate_t_hz,
                                 double rate_d_hz);

/// Coherence time hbar / (2 dE) from the beam energy spread.
double coherence_time_from_energy_spread(double energy_spread_ev);

/// Coherence length v * tau_c.
double coherence_length_m(double speed_m_s, double coherence_time_s);

}  // namespace nhbt
