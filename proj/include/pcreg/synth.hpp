#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcreg/point_cloud.hpp"
#include "pcreg/rng.hpp"

namespace pcreg {

// Hand-crafted deformation function used to synthesize labeled source pairs.
// Rigid transforms rotate about the coordinate origin and translate; the
// two-scale random field sums trilinearly interpolated vectors sampled on a
// coarse and a fine control grid.
struct DeformationSpec {
    enum class Kind { kRigid, kTwoScaleRandomField };

    Kind kind = Kind::kRigid;

    // Rigid: per-axis Euler angle sampled uniformly in [-rotation_range_deg,
    // +rotation_range_deg], translation per axis in [-translation_range_mm,
    // +translation_range_mm].
    double rotation_range_deg = 15.0;
    double translation_range_mm = 20.0;

    // Two-scale random field: control vectors are sampled per grid node with
    // components uniform in [-amplitude, amplitude].
    double coarse_spacing_mm = 60.0;
    double fine_spacing_mm = 20.0;
    double coarse_amplitude_mm = 15.0;
    double fine_amplitude_mm = 5.0;

    std::uint64_t seed = 0;

    void validate() const;
};

// Explicit rigid parameters; angles in radians, applied as
// p' = Rz(az) Ry(ay) Rx(ax) p + t.
struct RigidParams {
    Vec3 angles_rad;
    Vec3 translation;
};

RigidParams sample_rigid_params(const DeformationSpec& spec, Rng& rng);

PointCloud apply_rigid(const PointCloud& cloud, const RigidParams& params);

struct Deformed {
    PointCloud warped;  // def(cloud), same length and point order
    DisplacementField gt;  // cloud - warped, exact by pointwise subtraction
};

// Applies the deformation; warped + gt == cloud holds exactly.
Deformed apply_deformation(const PointCloud& cloud, const DeformationSpec& spec, Rng& rng);

// Labeled training triplet. For triplets built by make_source_triplet,
// moving + gt == fixed holds point-wise; teacher-synthesized pairs share the
// shape but intentionally break that correspondence (disjoint subsets).
struct SourceTriplet {
    PointCloud moving;
    PointCloud fixed;
    DisplacementField gt;  // defined on the moving cloud

    SourceTriplet(PointCloud m, PointCloud f, DisplacementField g);
};

// (def(C), C, C - def(C)) for a target cloud C.
SourceTriplet make_source_triplet(const PointCloud& target_cloud, const DeformationSpec& spec,
                                  Rng& rng);

// One registration case: fixed/moving pair, optional high-resolution moving
// pool, optional ground truth, optional landmark pairs.
struct RegistrationCase {
    std::string id;
    PointCloud fixed;
    PointCloud moving;
    std::optional<PointCloud> moving_highres;  // M_t* sampling pool
    std::optional<DisplacementField> gt;       // |gt| == |moving| when present
    std::optional<PointCloud> landmarks_moving;
    std::optional<PointCloud> landmarks_fixed;

    RegistrationCase(std::string case_id, PointCloud f, PointCloud m);

    void validate() const;
};

// Distinctive keypoints by local density scoring (neighbor count within
// density_radius) followed by greedy non-maximum suppression: candidates are
// visited in descending score (ties: lowest index) and rejected when strictly
// closer than nms_radius to an already accepted point.
PointCloud extract_keypoints(const PointCloud& cloud, double density_radius, double nms_radius,
                             std::size_t max_points);

// As extract_keypoints, but returns indices into the input cloud.
std::vector<std::size_t> extract_keypoint_indices(const PointCloud& cloud, double density_radius,
                                                  double nms_radius, std::size_t max_points);

struct PreAlignResult {
    RegistrationCase aligned;
    bool degenerate_axis = false;  // some axis had zero std; scale forced to 1
};

// Maps the moving side (cloud, high-res pool, moving landmarks, gt) per axis
// so its mean and standard deviation match the fixed cloud. A present gt is
// remapped so that moving + gt keeps pointing at the same target positions.
PreAlignResult pre_align(const RegistrationCase& c);

}  // namespace pcreg
