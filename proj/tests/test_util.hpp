#pragma once

#include <vector>

#include "pcreg/point_cloud.hpp"
#include "pcreg/rng.hpp"

namespace pcreg::testutil {

inline PointCloud random_cloud(std::size_t n, Rng& rng, double extent_mm = 100.0) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(rng.uniform_vec3(-extent_mm, extent_mm));
    return PointCloud(std::move(pts));
}

inline DisplacementField random_field(std::size_t n, Rng& rng, double extent_mm = 10.0) {
    std::vector<Vec3> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform_vec3(-extent_mm, extent_mm));
    return DisplacementField(std::move(v));
}

// Exhaustive nearest neighbor, ties by lowest index. Independent of the
// KD-tree implementation.
inline std::size_t brute_nearest(const PointCloud& cloud, const Vec3& q) {
    std::size_t best = 0;
    double best_d2 = squared_distance(cloud[0], q);
    for (std::size_t i = 1; i < cloud.size(); ++i) {
        const double d2 = squared_distance(cloud[i], q);
        if (d2 < best_d2) {
            best = i;
            best_d2 = d2;
        }
    }
    return best;
}

// O(N*M) Chamfer reference.
inline double brute_chamfer(const PointCloud& x, const PointCloud& y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double best = squared_distance(x[i], y[0]);
        for (std::size_t j = 1; j < y.size(); ++j) best = std::min(best, squared_distance(x[i], y[j]));
        sum += best;
    }
    for (std::size_t j = 0; j < y.size(); ++j) {
        double best = squared_distance(y[j], x[0]);
        for (std::size_t i = 1; i < x.size(); ++i) best = std::min(best, squared_distance(y[j], x[i]));
        sum += best;
    }
    return sum;
}

inline bool close_rel(double a, double b, double rel) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= rel * scale;
}

}  // namespace pcreg::testutil
