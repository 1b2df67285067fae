#include "pcreg/toydata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <string>

namespace pcreg {

namespace {

struct Segment {
    Vec3 a;
    Vec3 b;
    double length;
};

Vec3 jittered_direction(const Vec3& dir, double spread, Rng& rng) {
    const Vec3 v = dir + rng.unit_vector() * spread;
    const double n = norm(v);
    return n > 1e-9 ? v / n : dir;
}

}  // namespace

PointCloud make_branching_tree(const ToyTreeParams& params, Rng& rng) {
    struct Tip {
        Vec3 pos;
        Vec3 dir;
        int depth;
    };

    std::deque<Tip> tips;
    tips.push_back({{0.0, 0.0, 0.0}, jittered_direction({0.0, 0.0, 1.0}, 0.3, rng), 0});

    std::vector<Segment> segments;
    const double seg_len_lo = 0.14 * params.box_mm;
    const double seg_len_hi = 0.24 * params.box_mm;
    while (!tips.empty() && static_cast<int>(segments.size()) < params.max_segments) {
        Tip tip = tips.front();
        tips.pop_front();

        const double len = rng.uniform(seg_len_lo, seg_len_hi);
        const Vec3 end = tip.pos + tip.dir * len;
        segments.push_back({tip.pos, end, len});

        const bool branch = tip.depth < 6 && rng.uniform() < 0.55;
        if (branch) {
            tips.push_back({end, jittered_direction(tip.dir, 0.9, rng), tip.depth + 1});
            tips.push_back({end, jittered_direction(tip.dir, 0.9, rng), tip.depth + 1});
        } else if (tip.depth < 8) {
            tips.push_back({end, jittered_direction(tip.dir, 0.35, rng), tip.depth + 1});
        }
    }

    // Rescale the skeleton into a centered box of the requested extent.
    Vec3 lo = segments[0].a, hi = segments[0].a;
    for (const Segment& s : segments) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min({lo[a], s.a[a], s.b[a]});
            hi[a] = std::max({hi[a], s.a[a], s.b[a]});
        }
    }
    const Vec3 center = (lo + hi) * 0.5;
    double extent = 1e-9;
    for (int a = 0; a < 3; ++a) extent = std::max(extent, hi[a] - lo[a]);
    const double scale = params.box_mm / extent;

    std::vector<double> cumulative;
    cumulative.reserve(segments.size());
    double total = 0.0;
    for (const Segment& s : segments) {
        total += s.length;
        cumulative.push_back(total);
    }

    std::vector<Vec3> points;
    points.reserve(params.n_points);
    for (std::size_t i = 0; i < params.n_points; ++i) {
        const double u = rng.uniform() * total;
        const std::size_t si = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        const Segment& s = segments[std::min(si, segments.size() - 1)];
        const double t = rng.uniform();
        const Vec3 skel = (s.a + (s.b - s.a) * t - center) * scale;
        points.push_back(skel + rng.unit_vector() * rng.uniform(0.0, params.radius_mm));
    }
    return PointCloud(std::move(points));
}

RegistrationCase build_toy_case(const ToyDatasetParams& params, std::uint64_t case_seed,
                                const std::string& id) {
    Rng rng(case_seed);

    const PointCloud fixed_pool = make_branching_tree(params.tree, rng);
    // Moving side: the pool warped by the target-domain deformation. The
    // returned gt maps warped points back onto the base tree.
    const Deformed deformed = apply_deformation(fixed_pool, params.target_def, rng);
    const PointCloud& moving_pool = deformed.warped;

    const auto lm_idx = rng.sample_indices(fixed_pool.size(), params.n_landmarks);
    const auto kp_moving = extract_keypoint_indices(moving_pool, params.density_radius_mm,
                                                    params.nms_radius_mm, params.keypoints);
    const auto kp_fixed = extract_keypoint_indices(fixed_pool, params.density_radius_mm,
                                                   params.nms_radius_mm, params.keypoints);

    RegistrationCase c(id, fixed_pool.subset(kp_fixed), moving_pool.subset(kp_moving));
    c.moving_highres = moving_pool;
    c.gt = deformed.gt.subset(kp_moving);
    c.landmarks_moving = moving_pool.subset(lm_idx);
    c.landmarks_fixed = fixed_pool.subset(lm_idx);
    c.validate();

    return pre_align(c).aligned;
}

std::vector<RegistrationCase> build_toy_dataset(const ToyDatasetParams& params) {
    std::vector<RegistrationCase> cases;
    cases.reserve(params.n_cases);
    for (std::size_t i = 0; i < params.n_cases; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "case_%03zu", i);
        cases.push_back(build_toy_case(params, Rng::derive(params.seed, {0x70c5ULL, i}), id));
    }
    return cases;
}

}  // namespace pcreg
