#pragma once

#include <string>
#include <vector>

#include "nhbt/event_synth.hpp"
#include "nhbt/physics.hpp"

namespace nhbt {

/// A full experiment description, grouped the way the config file is:
/// [beam], [apparatus], [scan], [drift], [fit] sections of `key = value`
/// lines. The seed, scan positions and dwell time are mandatory; everything
/// else falls back to the defaults of the owning structs.
struct RunConfig {
  BeamParams beam;
  ApparatusParams apparatus;
  ScanConfig scan;
  DriftProfile drift;
  ProfileForm fit_form = ProfileForm::approx;

  /// Runs every owning module's validation; throws std::invalid_argument on
  /// hard violations, returns the concatenated soft warnings.
  std::vector<std::string> validate() const;
};

/// Parses config text. Unknown sections or keys, duplicate keys, bad value
/// syntax and missing mandatory keys all throw config_error naming the line.
/// `#` starts a comment; blank lines are ignored.
RunConfig parse_run_config(const std::string& text,
                           const std::string& origin = "<string>");

RunConfig read_run_config(const std::string& path);

/// Canonical text form; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& config);

const char* generator_mode_name(GeneratorMode mode);
const char* drift_kind_name(DriftKind kind);
const char* profile_form_name(ProfileForm form);

}  // namespace nhbt
