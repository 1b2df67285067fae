#include "pcreg/losses.hpp"

#include <stdexcept>

namespace pcreg {

double supervised_loss(const DisplacementField& phi_hat, const DisplacementField& gt) {
    if (phi_hat.size() != gt.size()) throw std::invalid_argument("supervised_loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < phi_hat.size(); ++i) acc += squared_norm(phi_hat[i] - gt[i]);
    return acc / static_cast<double>(phi_hat.size());
}

std::vector<double> resolve_scale_weights(const std::vector<double>& configured, std::size_t scales) {
    if (!configured.empty()) {
        if (configured.size() != scales)
            throw std::invalid_argument("scale_loss_weights: weight count != scale count");
        return configured;
    }
    return std::vector<double>(scales, 1.0 / static_cast<double>(scales));
}

namespace {

// Mean of |phi_i - target_i|^2 over one scale, on tape.
LossTerm scale_mse(Tape& tape, const ScalePrediction& scale, const DisplacementField& target) {
    if (scale.nodes.size() != target.size())
        throw std::invalid_argument("scale_mse: target length mismatch");
    const double inv_n = 1.0 / static_cast<double>(scale.nodes.size());
    std::vector<NodeRef> terms;
    terms.reserve(scale.nodes.size());
    std::vector<double> coeffs(scale.nodes.size(), inv_n);
    const double one[1] = {1.0};
    for (std::size_t i = 0; i < scale.nodes.size(); ++i) {
        const Vec3 t = target[i] * -1.0;
        const double bias[3] = {t.x, t.y, t.z};
        const NodeRef diff = tape.lin_comb({one, 1}, {&scale.nodes[i], 1}, {bias, 3});
        terms.push_back(tape.sq_norm(diff));
    }
    const NodeRef node = tape.lin_comb(coeffs, terms);
    return LossTerm{node, tape.value_scalar(node)};
}

LossTerm combine_scales(Tape& tape, const std::vector<LossTerm>& per_scale,
                        std::span<const double> weights) {
    if (per_scale.size() != weights.size())
        throw std::invalid_argument("scale weights do not match scale count");
    std::vector<NodeRef> nodes;
    nodes.reserve(per_scale.size());
    for (const LossTerm& t : per_scale) nodes.push_back(t.node);
    const NodeRef node = tape.lin_comb(weights, nodes);
    return LossTerm{node, tape.value_scalar(node)};
}

}  // namespace

LossTerm field_mse_loss(ForwardPass& fwd, const DisplacementField& target_full,
                        std::span<const double> scale_weights) {
    std::vector<LossTerm> per_scale;
    per_scale.reserve(fwd.scales.size());
    for (const ScalePrediction& scale : fwd.scales) {
        per_scale.push_back(scale_mse(fwd.tape, scale, target_full.subset(scale.indices)));
    }
    return combine_scales(fwd.tape, per_scale, scale_weights);
}

LossTerm field_mse_loss_scales(ForwardPass& fwd, const std::vector<DisplacementField>& targets,
                               std::span<const double> scale_weights) {
    if (targets.size() != fwd.scales.size())
        throw std::invalid_argument("field_mse_loss_scales: target count != scale count");
    std::vector<LossTerm> per_scale;
    per_scale.reserve(fwd.scales.size());
    for (std::size_t s = 0; s < fwd.scales.size(); ++s) {
        per_scale.push_back(scale_mse(fwd.tape, fwd.scales[s], targets[s]));
    }
    return combine_scales(fwd.tape, per_scale, scale_weights);
}

int filter_indicator(const PointCloud& moving, const PointCloud& fixed,
                     const NeighborIndex& fixed_index, const DisplacementField& phi_student,
                     const DisplacementField& phi_teacher) {
    const PointCloud warped_teacher = warp(moving, phi_teacher);
    const PointCloud warped_student = warp(moving, phi_student);
    const double d_teacher =
        chamfer_distance(warped_teacher, NeighborIndex(warped_teacher), fixed, fixed_index);
    const double d_student =
        chamfer_distance(warped_student, NeighborIndex(warped_student), fixed, fixed_index);
    return d_teacher < d_student ? 1 : 0;  // strict: equality rejects
}

int filter_indicator(const RegistrationCase& c, const DisplacementField& phi_student,
                     const DisplacementField& phi_teacher) {
    return filter_indicator(c.moving, c.fixed, NeighborIndex(c.fixed), phi_student, phi_teacher);
}

double consistency_loss(const RegistrationCase& c, const DisplacementField& phi_student,
                        const DisplacementField& phi_teacher) {
    const int indicator = filter_indicator(c, phi_student, phi_teacher);
    if (indicator == 0) return 0.0;
    return supervised_loss(phi_student, phi_teacher);
}

SynthesizedPair synthesize_pair(const RegistrationCase& c, const DisplacementField& phi_teacher,
                                std::size_t n_points, double interp_sigma_mm, Rng& rng) {
    if (!c.moving_highres)
        throw std::invalid_argument("synthesize_pair: case has no high-resolution moving pool");
    const PointCloud& pool = *c.moving_highres;
    if (pool.size() < 2 * n_points)
        throw std::invalid_argument("synthesize_pair: pool smaller than 2 * n_points");
    if (phi_teacher.size() != c.moving.size())
        throw std::invalid_argument("synthesize_pair: |phi_teacher| != |moving|");

    const DisplacementField pool_field =
        gaussian_interpolate(c.moving, phi_teacher, pool, interp_sigma_mm);

    std::vector<std::size_t> draw = rng.sample_indices(pool.size(), 2 * n_points);
    std::vector<std::size_t> a(draw.begin(), draw.begin() + static_cast<std::ptrdiff_t>(n_points));
    std::vector<std::size_t> b(draw.begin() + static_cast<std::ptrdiff_t>(n_points), draw.end());

    std::vector<Vec3> fixed_pts;
    fixed_pts.reserve(n_points);
    for (std::size_t j : b) fixed_pts.push_back(pool[j] + pool_field[j]);

    SourceTriplet triplet(pool.subset(a), PointCloud(std::move(fixed_pts)), pool_field.subset(a));
    return SynthesizedPair{std::move(triplet), std::move(a), std::move(b)};
}

LossTerm chamfer_direct_loss(ForwardPass& fwd, const PointCloud& moving, const PointCloud& fixed,
                             const NeighborIndex& fixed_index) {
    Tape& tape = fwd.tape;
    const ScalePrediction& finest = fwd.scales.back();
    const std::size_t n = moving.size();
    const std::size_t m = fixed.size();

    // Warped points on tape; assignments from the detached warp.
    const PointCloud warped = warp(moving, finest.values);
    const NeighborIndex warped_index(warped);

    std::vector<NodeRef> warped_nodes;
    warped_nodes.reserve(n);
    const double one[1] = {1.0};
    for (std::size_t i = 0; i < n; ++i) {
        const double bias[3] = {moving[i].x, moving[i].y, moving[i].z};
        warped_nodes.push_back(tape.lin_comb({one, 1}, {&finest.nodes[i], 1}, {bias, 3}));
    }

    std::vector<NodeRef> terms;
    std::vector<double> coeffs;
    terms.reserve(n + m);
    coeffs.reserve(n + m);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 nn = fixed[fixed_index.nearest(warped[i])] * -1.0;
        const double bias[3] = {nn.x, nn.y, nn.z};
        terms.push_back(tape.sq_norm(tape.lin_comb({one, 1}, {&warped_nodes[i], 1}, {bias, 3})));
        coeffs.push_back(1.0 / static_cast<double>(n));
    }
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t i = warped_index.nearest(fixed[j]);
        const Vec3 f = fixed[j] * -1.0;
        const double bias[3] = {f.x, f.y, f.z};
        terms.push_back(tape.sq_norm(tape.lin_comb({one, 1}, {&warped_nodes[i], 1}, {bias, 3})));
        coeffs.push_back(1.0 / static_cast<double>(m));
    }
    const NodeRef node = tape.lin_comb(coeffs, terms);
    return LossTerm{node, tape.value_scalar(node)};
}

}  // namespace pcreg
