#pragma once

#include <cstdint>
#include <vector>

#include "pcreg/rng.hpp"
#include "pcreg/synth.hpp"

namespace pcreg {

// Synthetic branching-curve cloud loosely mimicking a vessel tree: a random
// binary tree of line segments grown inside a cube, sampled arc-length
// uniformly with a small radial jitter.
struct ToyTreeParams {
    std::size_t n_points = 4096;
    double box_mm = 120.0;       // target extent of the tree
    double radius_mm = 1.2;      // cross-section jitter
    int max_segments = 48;
};

PointCloud make_branching_tree(const ToyTreeParams& params, Rng& rng);

// Toy dataset mirroring the real pipeline: per case a base tree is the fixed
// side, the moving side is its warp under the target-domain deformation
// (correspondence preserved), landmarks are point pairs drawn from the pool,
// inference clouds are density/NMS keypoints, and the whole case is
// pre-aligned.
struct ToyDatasetParams {
    std::size_t n_cases = 60;
    ToyTreeParams tree;
    DeformationSpec target_def;  // defaults to the two-scale random field
    std::size_t keypoints = 2048;
    std::size_t n_landmarks = 30;
    double density_radius_mm = 4.0;
    double nms_radius_mm = 1.0;
    std::uint64_t seed = 0;

    ToyDatasetParams() { target_def.kind = DeformationSpec::Kind::kTwoScaleRandomField; }
};

std::vector<RegistrationCase> build_toy_dataset(const ToyDatasetParams& params);

RegistrationCase build_toy_case(const ToyDatasetParams& params, std::uint64_t case_seed,
                                const std::string& id);

}  // namespace pcreg
