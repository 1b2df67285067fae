#pragma once

#include <cstdint>
#include <filesystem>

#include "pcreg/adam.hpp"
#include "pcreg/model.hpp"

namespace pcreg {

// Binary checkpoint layout (all integers little-endian):
//   bytes 0..7   magic "PCREGCK1"
//   u32          format version (1)
//   u64          model config hash
//   u64          parameter count n
//   f32 * n      parameters
//   f32 * n      Adam first moments
//   f32 * n      Adam second moments
//   u64          Adam step counter t
//   u64          global training step
// Parameters are quantized to 32-bit floats on disk.
struct Checkpoint {
    ModelParameters params;
    AdamState opt;
    std::int64_t step = 0;
    std::uint64_t config_hash = 0;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params,
                     const AdamState& opt, std::int64_t step, std::uint64_t config_hash);

// Verifies magic, version and, when expected_hash != 0, the config hash.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash = 0);

}  // namespace pcreg
