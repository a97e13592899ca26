#pragma once

#include <cstdint>
#include <string>

#include "epismc/smc.hpp"

namespace epismc {

// Binary particle-state snapshot: magic + format version + engine metadata +
// raw particle arrays, closed by an FNV-1a trailer over everything before it.
// Doubles round-trip bit-exactly. Loading verifies magic, version, size
// plausibility and the trailer, so truncation or in-place corruption surfaces
// as checkpoint_error instead of silent garbage.
struct CheckpointData {
    ParticleSet particles;
    std::uint64_t seed = 0;
    long full_evaluations = 0;
};

void save_checkpoint(const std::string& path, const ParticleSet& ps, std::uint64_t seed,
                     long full_evaluations);
CheckpointData load_checkpoint(const std::string& path);

}  // namespace epismc
