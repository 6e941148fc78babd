#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vamuon/optimizers.hpp"

namespace vamuon {

/// Full optimizer state of a run at some step.
struct RunState {
  std::int64_t step = 0;
  std::vector<ParamSlot> slots;
};

/// Binary checkpoint container: per-slot records of (id, family, t, weights,
/// moment buffers). Round-trips are bit-exact at 64-bit precision.
void save_checkpoint(const std::string& path, const RunState& state);

RunState load_checkpoint(const std::string& path);

}  // namespace vamuon
