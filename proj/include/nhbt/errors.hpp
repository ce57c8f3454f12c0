#pragma once

#include <stdexcept>
#include <string>

namespace nhbt {

/// A physics or sampling precondition does not hold (e.g. the source is too
/// dense for sequential thinning to be a valid antibunching approximation).
class precondition_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk data (event file, scan CSV). Carries a human-readable
/// location in the message.
class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration file. Message includes the offending line.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The weighted normal-equations matrix is singular: the data cannot
/// constrain the dip model (e.g. flat data leaves the coherence time free).
class degenerate_fit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nhbt
