#pragma once

#include "unmix/trainer.hpp"

#include <string>

namespace unmix {

// Self-contained training snapshot: a versioned container of named
// little-endian float64 arrays (network config and weights, dictionary,
// optimizer accumulators, counters, seed).  load_checkpoint rebuilds the
// exact TrainState, so resumed training continues bit-identically.
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

}  // namespace unmix
