#include "pcreg/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pcreg {

double chamfer_distance(const PointCloud& x, const PointCloud& y) {
    const NeighborIndex xi(x);
    const NeighborIndex yi(y);
    return chamfer_distance(x, xi, y, yi);
}

double chamfer_distance(const PointCloud& x, const NeighborIndex& x_index, const PointCloud& y,
                        const NeighborIndex& y_index) {
    if (x.size() != x_index.size() || y.size() != y_index.size())
        throw std::invalid_argument("chamfer_distance: index does not match cloud");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += y_index.nearest_squared_distance(x[i]);
    for (std::size_t j = 0; j < y.size(); ++j) sum += x_index.nearest_squared_distance(y[j]);
    return sum;
}

void gaussian_weights(const PointCloud& sources, const Vec3& target, double sigma,
                      std::vector<double>& weights) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_interpolate: sigma must be > 0");
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    const std::size_t ns = sources.size();
    weights.resize(ns);

    double max_expo = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ns; ++i) {
        weights[i] = -squared_distance(target, sources[i]) * inv_two_sigma2;
        if (weights[i] > max_expo) max_expo = weights[i];
    }
    // Shifted by the max exponent the leading weight is exp(0) = 1, so the
    // normalization never underflows; in the far field the result degrades to
    // the nearest source. Terms more than 50 nats below the max are dropped:
    // their relative contribution is < 2e-22 per source, below double
    // resolution for any realistic source count.
    double den = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        const double e = weights[i] - max_expo;
        weights[i] = e < -50.0 ? 0.0 : std::exp(e);
        den += weights[i];
    }
    const double inv_den = 1.0 / den;
    for (std::size_t i = 0; i < ns; ++i) weights[i] *= inv_den;
}

DisplacementField gaussian_interpolate(const PointCloud& sources, const DisplacementField& values,
                                       const PointCloud& targets, double sigma) {
    if (sources.size() != values.size())
        throw std::invalid_argument("gaussian_interpolate: |values| != |sources|");

    std::vector<Vec3> out;
    out.reserve(targets.size());
    std::vector<double> w;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        gaussian_weights(sources, targets[t], sigma, w);
        Vec3 acc{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < sources.size(); ++i) {
            if (w[i] != 0.0) acc += values[i] * w[i];
        }
        out.push_back(acc);
    }
    return DisplacementField(std::move(out));
}

VectorGrid rasterize_displacement(const PointCloud& cloud, const DisplacementField& field,
                                  double spacing, double sigma) {
    if (spacing <= 0.0) throw std::invalid_argument("rasterize_displacement: spacing must be > 0");
    if (cloud.size() != field.size())
        throw std::invalid_argument("rasterize_displacement: |field| != |cloud|");

    const auto [lo, hi] = cloud.bounding_box();
    const double pad = 2.0 * sigma;

    VectorGrid grid;
    grid.spacing = spacing;
    grid.origin = {lo.x - pad, lo.y - pad, lo.z - pad};
    for (int a = 0; a < 3; ++a) {
        const double extent = (hi[a] - lo[a]) + 2.0 * pad;
        grid.dims[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent / spacing)) + 1);
    }

    std::vector<Vec3> centers;
    centers.reserve(grid.voxel_count());
    for (std::int64_t iz = 0; iz < grid.dims[2]; ++iz)
        for (std::int64_t iy = 0; iy < grid.dims[1]; ++iy)
            for (std::int64_t ix = 0; ix < grid.dims[0]; ++ix) centers.push_back(grid.center(ix, iy, iz));

    const DisplacementField voxels =
        gaussian_interpolate(cloud, field, PointCloud(std::move(centers)), sigma);
    grid.data = voxels.vectors();
    return grid;
}

}  // namespace pcreg
