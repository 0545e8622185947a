#pragma once

#include <stdexcept>
#include <string>

namespace spikefab {

// Invalid run configuration: bad dimensions, non-positive time constants, ...
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violation of the fabric's packet protocol: out-of-range spike index,
// packet kind not allowed in the current phase, unroutable packet.
struct FabricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed on-disk data (dataset or weights file).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spikefab
