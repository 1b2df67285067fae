#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pcreg/vec3.hpp"

namespace pcreg {

// Ordered, immutable set of 3-D points in millimeters. Length >= 1 and all
// coordinates finite, checked at construction.
class PointCloud {
  public:
    explicit PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("PointCloud: empty point set");
        for (const Vec3& p : points_) {
            if (!p.finite()) throw std::invalid_argument("PointCloud: non-finite coordinate");
        }
    }

    std::size_t size() const { return points_.size(); }
    const Vec3& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<Vec3>& points() const { return points_; }

    auto begin() const { return points_.begin(); }
    auto end() const { return points_.end(); }

    PointCloud subset(const std::vector<std::size_t>& indices) const {
        std::vector<Vec3> pts;
        pts.reserve(indices.size());
        for (std::size_t i : indices) pts.push_back(points_.at(i));
        return PointCloud(std::move(pts));
    }

    std::pair<Vec3, Vec3> bounding_box() const {
        Vec3 lo = points_[0];
        Vec3 hi = points_[0];
        for (const Vec3& p : points_) {
            for (int a = 0; a < 3; ++a) {
                if (p[a] < lo[a]) lo[a] = p[a];
                if (p[a] > hi[a]) hi[a] = p[a];
            }
        }
        return {lo, hi};
    }

  private:
    std::vector<Vec3> points_;
};

// Per-point 3-D displacement vectors (mm) attached to a moving cloud.
// The association with a cloud is positional; callers check the length
// match where it matters.
class DisplacementField {
  public:
    DisplacementField() = default;

    explicit DisplacementField(std::vector<Vec3> vectors) : vectors_(std::move(vectors)) {
        for (const Vec3& v : vectors_) {
            if (!v.finite()) throw std::invalid_argument("DisplacementField: non-finite component");
        }
    }

    static DisplacementField zeros(std::size_t n) { return DisplacementField(std::vector<Vec3>(n)); }

    std::size_t size() const { return vectors_.size(); }
    const Vec3& operator[](std::size_t i) const { return vectors_[i]; }
    const std::vector<Vec3>& vectors() const { return vectors_; }

    auto begin() const { return vectors_.begin(); }
    auto end() const { return vectors_.end(); }

    DisplacementField subset(const std::vector<std::size_t>& indices) const {
        std::vector<Vec3> v;
        v.reserve(indices.size());
        for (std::size_t i : indices) v.push_back(vectors_.at(i));
        return DisplacementField(std::move(v));
    }

  private:
    std::vector<Vec3> vectors_;
};

// moving + field, point-wise. Lengths must match.
inline PointCloud warp(const PointCloud& cloud, const DisplacementField& field) {
    if (cloud.size() != field.size()) throw std::invalid_argument("warp: length mismatch");
    std::vector<Vec3> pts;
    pts.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) pts.push_back(cloud[i] + field[i]);
    return PointCloud(std::move(pts));
}

}  // namespace pcreg
