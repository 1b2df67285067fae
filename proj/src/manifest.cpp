#include "pcreg/manifest.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "pcreg/cloud_io.hpp"

namespace pcreg {

using nlohmann::json;

Split parse_split(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "val") return Split::kVal;
    if (s == "test") return Split::kTest;
    throw std::runtime_error("manifest: unknown split '" + s + "' (expected train|val|test)");
}

std::string split_name(Split s) {
    switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    }
    return "train";
}

std::vector<ManifestEntry> DatasetManifest::with_split(Split s) const {
    std::vector<ManifestEntry> out;
    for (const ManifestEntry& e : entries)
        if (e.split == s) out.push_back(e);
    return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("manifest " + path.string() + ": " + e.what());
    }

    DatasetManifest m;
    m.root = path.parent_path();

    if (!j.is_object() || !j.contains("units") || !j.contains("cases"))
        throw std::runtime_error("manifest " + path.string() + ": expected {units, cases}");
    if (j.at("units").get<std::string>() != "mm")
        throw std::runtime_error("manifest " + path.string() + ": units must be 'mm'");

    std::set<std::string> seen;
    for (const json& entry : j.at("cases")) {
        ManifestEntry e;
        e.id = entry.at("id").get<std::string>();
        if (!seen.insert(e.id).second)
            throw std::runtime_error("manifest " + path.string() + ": duplicate case id " + e.id);
        e.fixed = entry.at("fixed").get<std::string>();
        e.moving = entry.at("moving").get<std::string>();
        if (entry.contains("moving_highres"))
            e.moving_highres = entry.at("moving_highres").get<std::string>();
        if (entry.contains("landmarks_moving"))
            e.landmarks_moving = entry.at("landmarks_moving").get<std::string>();
        if (entry.contains("landmarks_fixed"))
            e.landmarks_fixed = entry.at("landmarks_fixed").get<std::string>();
        if (entry.contains("split")) e.split = parse_split(entry.at("split").get<std::string>());

        for (const std::string* rel :
             {&e.fixed, &e.moving, e.moving_highres ? &*e.moving_highres : nullptr,
              e.landmarks_moving ? &*e.landmarks_moving : nullptr,
              e.landmarks_fixed ? &*e.landmarks_fixed : nullptr}) {
            if (rel && !std::filesystem::exists(m.root / *rel))
                throw std::runtime_error("manifest: missing file " + (m.root / *rel).string() +
                                         " (case " + e.id + ")");
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    json cases = json::array();
    for (const ManifestEntry& e : manifest.entries) {
        json entry{{"id", e.id}, {"fixed", e.fixed}, {"moving", e.moving},
                   {"split", split_name(e.split)}};
        if (e.moving_highres) entry["moving_highres"] = *e.moving_highres;
        if (e.landmarks_moving) entry["landmarks_moving"] = *e.landmarks_moving;
        if (e.landmarks_fixed) entry["landmarks_fixed"] = *e.landmarks_fixed;
        cases.push_back(std::move(entry));
    }
    const json j{{"units", "mm"}, {"cases", std::move(cases)}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
}

RegistrationCase load_case(const DatasetManifest& manifest, const ManifestEntry& entry) {
    RegistrationCase c(entry.id, load_cloud(manifest.root / entry.fixed),
                       load_cloud(manifest.root / entry.moving));
    if (entry.moving_highres) c.moving_highres = load_cloud(manifest.root / *entry.moving_highres);
    if (entry.landmarks_moving) c.landmarks_moving = load_cloud(manifest.root / *entry.landmarks_moving);
    if (entry.landmarks_fixed) c.landmarks_fixed = load_cloud(manifest.root / *entry.landmarks_fixed);
    c.validate();
    return c;
}

std::vector<RegistrationCase> load_cases(const DatasetManifest& manifest, Split split) {
    std::vector<RegistrationCase> out;
    for (const ManifestEntry& e : manifest.with_split(split)) out.push_back(load_case(manifest, e));
    return out;
}

}  // namespace pcreg
