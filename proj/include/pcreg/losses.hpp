#pragma once

#include <span>
#include <vector>

#include "pcreg/geometry.hpp"
#include "pcreg/model.hpp"
#include "pcreg/rng.hpp"
#include "pcreg/synth.hpp"

namespace pcreg {

// Mean squared per-point vector error between a predicted and a target field.
double supervised_loss(const DisplacementField& phi_hat, const DisplacementField& gt);

// Per-scale loss weights; an empty configuration resolves to 1/scales each so
// the total stays comparable between single- and two-scale models.
std::vector<double> resolve_scale_weights(const std::vector<double>& configured, std::size_t scales);

// A differentiable scalar loss living on a forward pass's tape, plus its
// detached value.
struct LossTerm {
    NodeRef node;
    double value = 0.0;
};

// Multi-scale mean-squared field loss against a target defined on the full
// moving cloud; each scale compares against the target restricted to its
// point subset.
LossTerm field_mse_loss(ForwardPass& fwd, const DisplacementField& target_full,
                        std::span<const double> scale_weights);

// As field_mse_loss with explicit per-scale targets (already restricted),
// e.g. the detached per-scale predictions of the teacher.
LossTerm field_mse_loss_scales(ForwardPass& fwd, const std::vector<DisplacementField>& targets,
                               std::span<const double> scale_weights);

// Pseudo-label filter: 1 iff the teacher's warp is strictly closer to the
// fixed cloud than the student's warp in symmetric Chamfer distance
// (equality rejects). Evaluated in double precision.
int filter_indicator(const RegistrationCase& c, const DisplacementField& phi_student,
                     const DisplacementField& phi_teacher);
int filter_indicator(const PointCloud& moving, const PointCloud& fixed,
                     const NeighborIndex& fixed_index, const DisplacementField& phi_student,
                     const DisplacementField& phi_teacher);

// Filtered consistency value: indicator times the mean squared
// student-teacher field difference (finest scale).
double consistency_loss(const RegistrationCase& c, const DisplacementField& phi_student,
                        const DisplacementField& phi_teacher);

// Training pair synthesized by the teacher: its prediction is interpolated to
// the high-resolution pool, and two disjoint subsets form the input pair so
// no trivial one-to-one correspondences exist. The stored gt is exactly the
// interpolated teacher field on subset A.
struct SynthesizedPair {
    SourceTriplet triplet;
    std::vector<std::size_t> subset_a;  // indices of triplet.moving in the pool
    std::vector<std::size_t> subset_b;  // indices of the warped fixed side
};

SynthesizedPair synthesize_pair(const RegistrationCase& c, const DisplacementField& phi_teacher,
                                std::size_t n_points, double interp_sigma_mm, Rng& rng);

// Differentiable symmetric Chamfer loss (per-point mean of both directions)
// of the warped moving cloud against the fixed cloud. Nearest-neighbor
// assignments are held fixed at the current warp (subgradient). Used only by
// the negative-result demonstration.
LossTerm chamfer_direct_loss(ForwardPass& fwd, const PointCloud& moving, const PointCloud& fixed,
                             const NeighborIndex& fixed_index);

}  // namespace pcreg
