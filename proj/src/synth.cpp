#include "pcreg/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pcreg/kdtree.hpp"

namespace pcreg {

void DeformationSpec::validate() const {
    if (rotation_range_deg < 0.0 || rotation_range_deg > 180.0)
        throw std::invalid_argument("DeformationSpec: rotation range must lie in [0, 180] deg");
    if (translation_range_mm < 0.0)
        throw std::invalid_argument("DeformationSpec: translation range must be >= 0");
    if (coarse_spacing_mm <= 0.0 || fine_spacing_mm <= 0.0)
        throw std::invalid_argument("DeformationSpec: grid spacings must be > 0");
    if (coarse_amplitude_mm < 0.0 || fine_amplitude_mm < 0.0)
        throw std::invalid_argument("DeformationSpec: amplitudes must be >= 0");
}

RigidParams sample_rigid_params(const DeformationSpec& spec, Rng& rng) {
    const double rot = spec.rotation_range_deg * M_PI / 180.0;
    RigidParams p;
    p.angles_rad = rng.uniform_vec3(-rot, rot);
    p.translation = rng.uniform_vec3(-spec.translation_range_mm, spec.translation_range_mm);
    return p;
}

PointCloud apply_rigid(const PointCloud& cloud, const RigidParams& params) {
    const double cx = std::cos(params.angles_rad.x), sx = std::sin(params.angles_rad.x);
    const double cy = std::cos(params.angles_rad.y), sy = std::sin(params.angles_rad.y);
    const double cz = std::cos(params.angles_rad.z), sz = std::sin(params.angles_rad.z);

    // R = Rz * Ry * Rx
    const double r00 = cz * cy;
    const double r01 = cz * sy * sx - sz * cx;
    const double r02 = cz * sy * cx + sz * sx;
    const double r10 = sz * cy;
    const double r11 = sz * sy * sx + cz * cx;
    const double r12 = sz * sy * cx - cz * sx;
    const double r20 = -sy;
    const double r21 = cy * sx;
    const double r22 = cy * cx;

    std::vector<Vec3> out;
    out.reserve(cloud.size());
    for (const Vec3& p : cloud) {
        out.push_back({r00 * p.x + r01 * p.y + r02 * p.z + params.translation.x,
                       r10 * p.x + r11 * p.y + r12 * p.z + params.translation.y,
                       r20 * p.x + r21 * p.y + r22 * p.z + params.translation.z});
    }
    return PointCloud(std::move(out));
}

namespace {

// Regular vector-valued control grid evaluated by trilinear interpolation.
// The grid covers the query bounding box with one spare cell on each side, so
// every query point falls strictly inside.
struct ControlGrid {
    Vec3 origin;
    double spacing;
    std::array<std::int64_t, 3> dims;
    std::vector<Vec3> nodes;

    ControlGrid(const Vec3& lo, const Vec3& hi, double spacing_mm, double amplitude, Rng& rng)
        : spacing(spacing_mm) {
        for (int a = 0; a < 3; ++a) {
            origin[a] = lo[a] - spacing;
            const double extent = (hi[a] - lo[a]) + 2.0 * spacing;
            dims[a] = static_cast<std::int64_t>(std::ceil(extent / spacing)) + 2;
        }
        nodes.resize(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]));
        for (Vec3& v : nodes) v = rng.uniform_vec3(-amplitude, amplitude);
    }

    const Vec3& node(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
        return nodes[static_cast<std::size_t>((iz * dims[1] + iy) * dims[0] + ix)];
    }

    Vec3 evaluate(const Vec3& p) const {
        double u[3], f[3];
        std::int64_t c[3];
        for (int a = 0; a < 3; ++a) {
            u[a] = (p[a] - origin[a]) / spacing;
            c[a] = static_cast<std::int64_t>(std::floor(u[a]));
            c[a] = std::clamp<std::int64_t>(c[a], 0, dims[a] - 2);
            f[a] = u[a] - static_cast<double>(c[a]);
        }
        Vec3 acc{0.0, 0.0, 0.0};
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) *
                                     (dz ? f[2] : 1.0 - f[2]);
                    acc += node(c[0] + dx, c[1] + dy, c[2] + dz) * w;
                }
        return acc;
    }
};

}  // namespace

Deformed apply_deformation(const PointCloud& cloud, const DeformationSpec& spec, Rng& rng) {
    spec.validate();

    PointCloud warped = [&] {
        if (spec.kind == DeformationSpec::Kind::kRigid) {
            return apply_rigid(cloud, sample_rigid_params(spec, rng));
        }
        const auto [lo, hi] = cloud.bounding_box();
        const ControlGrid coarse(lo, hi, spec.coarse_spacing_mm, spec.coarse_amplitude_mm, rng);
        const ControlGrid fine(lo, hi, spec.fine_spacing_mm, spec.fine_amplitude_mm, rng);
        std::vector<Vec3> out;
        out.reserve(cloud.size());
        for (const Vec3& p : cloud) out.push_back(p + coarse.evaluate(p) + fine.evaluate(p));
        return PointCloud(std::move(out));
    }();

    // gt is the point-wise complement of the warp; re-deriving the warped
    // coordinate from it makes warped + gt round back to the original
    // coordinate wherever that is representable (it is off by at most a few
    // ulps of the displacement otherwise).
    std::vector<Vec3> gt(cloud.size());
    std::vector<Vec3> adjusted(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            const double g = cloud[i][a] - warped[i][a];
            gt[i][a] = g;
            adjusted[i][a] = cloud[i][a] - g;
        }
    }
    return Deformed{PointCloud(std::move(adjusted)), DisplacementField(std::move(gt))};
}

SourceTriplet::SourceTriplet(PointCloud m, PointCloud f, DisplacementField g)
    : moving(std::move(m)), fixed(std::move(f)), gt(std::move(g)) {
    if (moving.size() != fixed.size() || moving.size() != gt.size())
        throw std::invalid_argument("SourceTriplet: moving/fixed/gt lengths differ");
}

SourceTriplet make_source_triplet(const PointCloud& target_cloud, const DeformationSpec& spec,
                                  Rng& rng) {
    Deformed d = apply_deformation(target_cloud, spec, rng);
    return SourceTriplet(std::move(d.warped), target_cloud, std::move(d.gt));
}

RegistrationCase::RegistrationCase(std::string case_id, PointCloud f, PointCloud m)
    : id(std::move(case_id)), fixed(std::move(f)), moving(std::move(m)) {}

void RegistrationCase::validate() const {
    if (gt && gt->size() != moving.size())
        throw std::invalid_argument("RegistrationCase " + id + ": |gt| != |moving|");
    if (landmarks_moving.has_value() != landmarks_fixed.has_value())
        throw std::invalid_argument("RegistrationCase " + id + ": landmark clouds must come in pairs");
    if (landmarks_moving && landmarks_moving->size() != landmarks_fixed->size())
        throw std::invalid_argument("RegistrationCase " + id + ": landmark clouds differ in length");
}

std::vector<std::size_t> extract_keypoint_indices(const PointCloud& cloud, double density_radius,
                                                  double nms_radius, std::size_t max_points) {
    if (density_radius <= 0.0 || nms_radius < 0.0)
        throw std::invalid_argument("extract_keypoints: need density_radius > 0 and nms_radius >= 0");
    if (max_points == 0) throw std::invalid_argument("extract_keypoints: max_points must be >= 1");

    const NeighborIndex index(cloud);
    const std::size_t n = cloud.size();

    std::vector<std::size_t> score(n);
    for (std::size_t i = 0; i < n; ++i) score[i] = index.count_within(cloud[i], density_radius) - 1;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });

    const double r2 = nms_radius * nms_radius;
    std::vector<std::size_t> accepted;
    for (std::size_t cand : order) {
        if (accepted.size() >= max_points) break;
        bool suppressed = false;
        for (std::size_t a : accepted) {
            if (squared_distance(cloud[cand], cloud[a]) < r2) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) accepted.push_back(cand);
    }
    return accepted;
}

PointCloud extract_keypoints(const PointCloud& cloud, double density_radius, double nms_radius,
                             std::size_t max_points) {
    return cloud.subset(extract_keypoint_indices(cloud, density_radius, nms_radius, max_points));
}

namespace {

struct AxisStats {
    Vec3 mean;
    Vec3 std;
};

AxisStats axis_stats(const PointCloud& cloud) {
    AxisStats s;
    for (const Vec3& p : cloud) s.mean += p;
    s.mean = s.mean / static_cast<double>(cloud.size());
    Vec3 var;
    for (const Vec3& p : cloud) {
        const Vec3 d = p - s.mean;
        var += Vec3{d.x * d.x, d.y * d.y, d.z * d.z};
    }
    var = var / static_cast<double>(cloud.size());
    s.std = {std::sqrt(var.x), std::sqrt(var.y), std::sqrt(var.z)};
    return s;
}

}  // namespace

PreAlignResult pre_align(const RegistrationCase& c) {
    c.validate();
    if (c.fixed.size() < 2 || c.moving.size() < 2)
        throw std::invalid_argument("pre_align: both clouds need >= 2 points");

    const AxisStats fs = axis_stats(c.fixed);
    const AxisStats ms = axis_stats(c.moving);

    Vec3 scale;
    bool degenerate = false;
    for (int a = 0; a < 3; ++a) {
        if (ms.std[a] > 0.0) {
            scale[a] = fs.std[a] / ms.std[a];
        } else {
            scale[a] = 1.0;  // translation only along this axis
            degenerate = true;
        }
    }

    const auto map_point = [&](const Vec3& p) -> Vec3 {
        return {(p.x - ms.mean.x) * scale.x + fs.mean.x, (p.y - ms.mean.y) * scale.y + fs.mean.y,
                (p.z - ms.mean.z) * scale.z + fs.mean.z};
    };
    const auto map_cloud = [&](const PointCloud& cloud) {
        std::vector<Vec3> pts;
        pts.reserve(cloud.size());
        for (const Vec3& p : cloud) pts.push_back(map_point(p));
        return PointCloud(std::move(pts));
    };

    RegistrationCase out(c.id, c.fixed, map_cloud(c.moving));
    if (c.moving_highres) out.moving_highres = map_cloud(*c.moving_highres);
    if (c.landmarks_moving) {
        out.landmarks_moving = map_cloud(*c.landmarks_moving);
        out.landmarks_fixed = c.landmarks_fixed;
    }
    if (c.gt) {
        // Keep moving + gt pointing at the same absolute target positions.
        std::vector<Vec3> gt;
        gt.reserve(c.gt->size());
        for (std::size_t i = 0; i < c.gt->size(); ++i) {
            gt.push_back(c.moving[i] + (*c.gt)[i] - out.moving[i]);
        }
        out.gt = DisplacementField(std::move(gt));
    }
    return PreAlignResult{std::move(out), degenerate};
}

}  // namespace pcreg
