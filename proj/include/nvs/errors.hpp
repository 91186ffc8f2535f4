#pragma once

#include <stdexcept>

namespace nvs {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// file or directory absent
struct MissingFile : IoError {
  using IoError::IoError;
};

// unparseable or structurally invalid content
struct BadHeader : IoError {
  using IoError::IoError;
};

// frames disagree on width/height
struct ResolutionMismatch : IoError {
  using IoError::IoError;
};

// per-view pose count differs from frame count (or across views)
struct PoseCountMismatch : IoError {
  using IoError::IoError;
};

// write failed or content violates a storage invariant
struct IoFailure : IoError {
  using IoError::IoError;
};

// paired sequences or grids disagree in length/shape
struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nvs
