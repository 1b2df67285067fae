#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pcreg/kdtree.hpp"
#include "pcreg/point_cloud.hpp"

namespace pcreg {

// Symmetric Chamfer distance in mm^2:
//   sum_x min_y |x-y|^2 + sum_y min_x |x-y|^2.
// Computed as a sum (not a mean), so it scales with the cloud sizes.
// Always evaluated in double precision.
double chamfer_distance(const PointCloud& x, const PointCloud& y);

// Variant reusing prebuilt indices (the indices must be built over x and y).
double chamfer_distance(const PointCloud& x, const NeighborIndex& x_index, const PointCloud& y,
                        const NeighborIndex& y_index);

// Normalized Gaussian scattered-data interpolation of per-source vectors to
// arbitrary target positions:
//   v(p) = sum_i w_i v_i / sum_i w_i,  w_i = exp(-|p - s_i|^2 / (2 sigma^2)).
// Weights are evaluated relative to the largest one, so the denominator never
// underflows; in the far-field limit the result degrades to the nearest
// source's vector instead of NaN.
DisplacementField gaussian_interpolate(const PointCloud& sources, const DisplacementField& values,
                                       const PointCloud& targets, double sigma);

// The per-target kernel of gaussian_interpolate: normalized weights of every
// source for one target position. Entries more than 50 nats below the leading
// weight are exactly zero.
void gaussian_weights(const PointCloud& sources, const Vec3& target, double sigma,
                      std::vector<double>& weights);

// Regular grid of 3-D vectors. Voxel centers are origin + index * spacing;
// data is stored x-fastest.
struct VectorGrid {
    Vec3 origin;
    double spacing = 1.0;
    std::array<std::int64_t, 3> dims{1, 1, 1};
    std::vector<Vec3> data;

    std::size_t linear(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
        return static_cast<std::size_t>((iz * dims[1] + iy) * dims[0] + ix);
    }
    Vec3 center(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
        return {origin.x + static_cast<double>(ix) * spacing,
                origin.y + static_cast<double>(iy) * spacing,
                origin.z + static_cast<double>(iz) * spacing};
    }
    const Vec3& at(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
        return data[linear(ix, iy, iz)];
    }
    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
};

// Rasterizes a sparse displacement field onto a regular grid covering the
// cloud bounding box padded by 2*sigma, interpolating each voxel center with
// gaussian_interpolate. A collapsed axis yields a single-voxel extent there.
VectorGrid rasterize_displacement(const PointCloud& cloud, const DisplacementField& field,
                                  double spacing, double sigma);

}  // namespace pcreg
