#pragma once

#include <filesystem>
#include <string>

#include "pcreg/point_cloud.hpp"

namespace pcreg {

// Canonical plain-ASCII interchange format:
//   xyz mm <count>
//   <x> <y> <z>          (one decimal triple per line, 9 significant digits)
// Non-finite values are rejected; parse errors name the offending line.
PointCloud load_cloud(const std::filesystem::path& path);

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);

// Displacement fields reuse the same layout (vectors are mm triples too).
DisplacementField load_field(const std::filesystem::path& path);

void save_field(const std::filesystem::path& path, const DisplacementField& field);

}  // namespace pcreg
