#pragma once

#include <string>

#include "moca/calibrate.hpp"

namespace moca {

// Versioned binary checkpoint: "MOCA1" magic, little-endian 32-bit numbers,
// length-prefixed UTF-8 names, raw f32 tensor payloads. Round trips are
// bitwise lossless for f32-precision states.
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace moca
