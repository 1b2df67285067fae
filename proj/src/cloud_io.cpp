#include "pcreg/cloud_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pcreg {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<Vec3> load_triples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) fail(path, line_no, "missing header");

    std::istringstream header(line);
    std::string tag, unit;
    long long count = -1;
    if (!(header >> tag >> unit >> count) || tag != "xyz" || unit != "mm" || count < 0)
        fail(path, line_no, "expected header 'xyz mm <count>'");
    std::string extra;
    if (header >> extra) fail(path, line_no, "trailing tokens in header");

    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(count));
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const char* s = line.c_str();
        char* end = nullptr;
        Vec3 p;
        for (int a = 0; a < 3; ++a) {
            errno = 0;
            const double v = std::strtod(s, &end);
            if (end == s || errno != 0) fail(path, line_no, "malformed coordinate triple");
            if (!std::isfinite(v)) fail(path, line_no, "non-finite coordinate");
            p[static_cast<std::size_t>(a)] = v;
            s = end;
        }
        while (*s == ' ' || *s == '\t' || *s == '\r') ++s;
        if (*s != '\0') fail(path, line_no, "trailing tokens after coordinate triple");
        out.push_back(p);
    }
    if (out.size() != static_cast<std::size_t>(count)) {
        throw std::runtime_error(path.string() + ": header count " + std::to_string(count) +
                                 " but " + std::to_string(out.size()) + " data lines");
    }
    return out;
}

void save_triples(const std::filesystem::path& path, const std::vector<Vec3>& triples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "xyz mm " << triples.size() << "\n";
    char buf[128];
    for (const Vec3& p : triples) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", p.x, p.y, p.z);
        out << buf;
    }
    if (!out) throw std::runtime_error("short write to " + path.string());
}

}  // namespace

PointCloud load_cloud(const std::filesystem::path& path) { return PointCloud(load_triples(path)); }

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
    save_triples(path, cloud.points());
}

DisplacementField load_field(const std::filesystem::path& path) {
    return DisplacementField(load_triples(path));
}

void save_field(const std::filesystem::path& path, const DisplacementField& field) {
    save_triples(path, field.vectors());
}

}  // namespace pcreg
