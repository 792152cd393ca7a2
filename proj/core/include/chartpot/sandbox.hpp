#pragma once

#include <cstdint>

namespace chartpot {

/// Resource budget for evaluating untrusted generated programs and for
/// admitting parsed chart dictionaries as program input.
struct SandboxLimits {
  std::int64_t max_steps = 1'000'000;
  std::int64_t max_depth = 64;
  std::int64_t max_nodes = 200'000;
  std::int64_t wall_timeout_ms = 2'000;

  bool valid() const noexcept {
    return max_steps > 0 && max_depth > 0 && max_nodes > 0 && wall_timeout_ms > 0;
  }

  friend bool operator==(const SandboxLimits&, const SandboxLimits&) = default;
};

}  // namespace chartpot
