#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcreg/synth.hpp"

namespace pcreg {

enum class Split { kTrain, kVal, kTest };

Split parse_split(const std::string& s);
std::string split_name(Split s);

// One entry of a dataset manifest; paths are relative to the manifest root.
struct ManifestEntry {
    std::string id;
    std::string fixed;
    std::string moving;
    std::optional<std::string> moving_highres;
    std::optional<std::string> landmarks_moving;
    std::optional<std::string> landmarks_fixed;
    Split split = Split::kTrain;
};

// JSON dataset manifest: declared units (mm) plus a list of case entries.
// Every referenced file must exist; ids must be unique.
struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;

    std::vector<ManifestEntry> with_split(Split s) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Loads and validates the referenced cloud files of one entry.
RegistrationCase load_case(const DatasetManifest& manifest, const ManifestEntry& entry);

std::vector<RegistrationCase> load_cases(const DatasetManifest& manifest, Split split);

}  // namespace pcreg
