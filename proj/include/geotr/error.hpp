#pragma once

#include <stdexcept>
#include <string>

namespace geotr {

// Shape/rank disagreements between tensors and the operation contract.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf escaping a kernel, non-finite loss, degenerate numeric state.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Out-of-range label or slot index.
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Filesystem-level failures (missing file, short write).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structural problems in an on-disk format. `kind` distinguishes the
// failure so callers and tests can react to the exact defect.
struct FormatError : std::runtime_error {
  enum class Kind { Magic, Version, Truncated, Checksum, Header };

  FormatError(Kind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}

  Kind kind;
};

}  // namespace geotr
