#include "pcreg/model.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "pcreg/geometry.hpp"
#include "pcreg/kdtree.hpp"
#include "pcreg/rng.hpp"

namespace pcreg {

void ModelConfig::validate() const {
    if (k < 1) throw std::invalid_argument("ModelConfig: k must be >= 1");
    if (feature_width < 1) throw std::invalid_argument("ModelConfig: feature_width must be >= 1");
    if (scales != 1 && scales != 2) throw std::invalid_argument("ModelConfig: scales must be 1 or 2");
    if (coarse_points < 1) throw std::invalid_argument("ModelConfig: coarse_points must be >= 1");
    if (corr_length_mm <= 0.0) throw std::invalid_argument("ModelConfig: corr_length_mm must be > 0");
    if (upsample_sigma_mm <= 0.0)
        throw std::invalid_argument("ModelConfig: upsample_sigma_mm must be > 0");
}

ParamLayout param_layout(const ModelConfig& cfg) {
    const std::size_t w = static_cast<std::size_t>(cfg.feature_width);
    ParamLayout layout{};
    std::size_t off = 0;
    auto take = [&off](std::size_t n) {
        const std::size_t at = off;
        off += n;
        return at;
    };
    layout.w1 = take(w * 3);
    layout.b1 = take(w);
    layout.w2 = take(w * w);
    layout.b2 = take(w);
    for (int s = 0; s < cfg.scales; ++s) {
        ParamLayout::Decoder d{};
        d.w3 = take(w * (2 * w + 3));
        d.b3 = take(w);
        d.w4 = take(3 * (w + 3));
        d.b4 = take(3);
        layout.decoders.push_back(d);
    }
    layout.total = off;
    return layout;
}

std::size_t ModelConfig::param_count() const { return param_layout(*this).total; }

std::string ModelConfig::canonical_string() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "k=%d;fw=%d;scales=%d;cp=%d;act=%s;tau=%.17g;us=%.17g;seed=%llu",
                  k, feature_width, scales, coarse_points, tanh_activation ? "tanh" : "relu",
                  corr_length_mm, upsample_sigma_mm, static_cast<unsigned long long>(init_seed));
    return buf;
}

std::uint64_t ModelConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : canonical_string()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

ModelParameters ModelParameters::initialize(const ModelConfig& cfg) {
    cfg.validate();
    const ParamLayout layout = param_layout(cfg);
    std::vector<double> v(layout.total, 0.0);
    Rng rng(Rng::derive(cfg.init_seed, {0x6d6f64656cULL}));

    auto fill = [&](std::size_t off, std::size_t count, std::size_t fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) v[off + i] = rng.uniform(-s, s);
    };
    const std::size_t w = static_cast<std::size_t>(cfg.feature_width);
    fill(layout.w1, w * 3, 3);
    fill(layout.w2, w * w, w);
    for (const auto& dec : layout.decoders) {
        fill(dec.w3, w * (2 * w + 3), 2 * w + 3);
        // dec.w4 / dec.b4 stay zero: identity registration at init.
    }
    return ModelParameters(std::move(v));
}

std::vector<std::size_t> farthest_point_indices(const PointCloud& cloud, std::size_t count) {
    const std::size_t n = cloud.size();
    count = std::min(count, n);

    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (lex_less(cloud[i], cloud[start])) start = i;
    }

    std::vector<std::size_t> selected;
    selected.reserve(count);
    selected.push_back(start);
    std::vector<double> min_d2(n);
    for (std::size_t i = 0; i < n; ++i) min_d2[i] = squared_distance(cloud[i], cloud[start]);

    while (selected.size() < count) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (min_d2[i] == 0.0) continue;  // already selected or coincident
            if (best == n || min_d2[i] > min_d2[best] ||
                (min_d2[i] == min_d2[best] && lex_less(cloud[i], cloud[best]))) {
                best = i;
            }
        }
        if (best == n) break;  // all remaining points coincide with selections
        selected.push_back(best);
        for (std::size_t i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], squared_distance(cloud[i], cloud[best]));
    }
    // Coincident leftovers (min_d2 == 0 but unselected) are only reachable
    // when the cloud has fewer distinct positions than `count`; pad by index.
    for (std::size_t i = 0; i < n && selected.size() < count; ++i) {
        bool taken = false;
        for (std::size_t s : selected)
            if (s == i) {
                taken = true;
                break;
            }
        if (!taken) selected.push_back(i);
    }
    return selected;
}

namespace {

struct ModelContext {
    const ModelConfig& cfg;
    const ParamLayout& layout;
    Tape& tape;

    NodeRef act(NodeRef x) const {
        return cfg.tanh_activation ? tape.tanh_act(x) : tape.relu_act(x);
    }
};

// Per-point local features: shared map on k-NN relative offsets, max-pooled,
// then a second shared layer. Offsets are normalized by the correlation
// length so the nonlinearities operate in their active range regardless of
// the physical cloud scale.
std::vector<NodeRef> encode(ModelContext& mc, const PointCloud& cloud, const NeighborIndex& index) {
    const int w = mc.cfg.feature_width;
    const double inv_len = 1.0 / mc.cfg.corr_length_mm;
    std::vector<NodeRef> feats;
    feats.reserve(cloud.size());
    std::vector<NodeRef> hidden;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto neighbors = index.query_canonical(cloud[i], static_cast<std::size_t>(mc.cfg.k));
        hidden.clear();
        for (std::size_t j : neighbors) {
            const NodeRef off = mc.tape.constant_vec3((cloud[j] - cloud[i]) * inv_len);
            hidden.push_back(mc.act(mc.tape.affine(off, mc.layout.w1, mc.layout.b1, w)));
        }
        const NodeRef pooled = mc.tape.max_pool(hidden);
        feats.push_back(mc.act(mc.tape.affine(pooled, mc.layout.w2, mc.layout.b2, w)));
    }
    return feats;
}

// One prediction scale over the given moving/fixed clouds. `upsampled`, when
// present, carries the coarse prediction per moving point; the decoder then
// produces a residual on top of it.
std::vector<NodeRef> predict_scale(ModelContext& mc, const PointCloud& moving,
                                   const PointCloud& fixed, const ParamLayout::Decoder& dec,
                                   const std::vector<NodeRef>* upsampled) {
    Tape& t = mc.tape;
    const int w = mc.cfg.feature_width;
    const double inv_sqrt_w = 1.0 / std::sqrt(static_cast<double>(w));
    const double neg_inv_two_tau2 = -1.0 / (2.0 * mc.cfg.corr_length_mm * mc.cfg.corr_length_mm);

    const NeighborIndex moving_index(moving);
    const NeighborIndex fixed_index(fixed);
    const std::vector<NodeRef> feats_m = encode(mc, moving, moving_index);
    const std::vector<NodeRef> feats_f = encode(mc, fixed, fixed_index);

    std::vector<NodeRef> out;
    out.reserve(moving.size());
    std::vector<NodeRef> scores, cand_feats, offsets;
    for (std::size_t i = 0; i < moving.size(); ++i) {
        // Candidates are gathered around the coarsely warped position (the
        // values are detached; the scores remain differentiable through u),
        // so the refinement reaches targets the coarse scale moved toward.
        const Vec3 query_pos =
            upsampled ? moving[i] + t.value_vec3((*upsampled)[i]) : moving[i];
        const auto cand = fixed_index.query_canonical(query_pos, static_cast<std::size_t>(mc.cfg.k));
        scores.clear();
        cand_feats.clear();
        offsets.clear();
        for (std::size_t q : cand) {
            const Vec3 rel = fixed[q] - moving[i];
            const NodeRef sim = t.dot(feats_m[i], feats_f[q]);
            if (upsampled) {
                // Residual offset r = (fixed_q - moving_i) - u_i, on tape.
                const double bias[3] = {rel.x, rel.y, rel.z};
                const double neg_one[1] = {-1.0};
                const NodeRef u = (*upsampled)[i];
                const NodeRef r = t.lin_comb({neg_one, 1}, {&u, 1}, {bias, 3});
                const NodeRef r2 = t.sq_norm(r);
                const double cs[2] = {inv_sqrt_w, neg_inv_two_tau2};
                const NodeRef parts[2] = {sim, r2};
                scores.push_back(t.lin_comb({cs, 2}, {parts, 2}));
                offsets.push_back(r);
            } else {
                const double cs[1] = {inv_sqrt_w};
                const double bias[1] = {squared_norm(rel) * neg_inv_two_tau2};
                scores.push_back(t.lin_comb({cs, 1}, {&sim, 1}, {bias, 1}));
                offsets.push_back(t.constant_vec3(rel));
            }
            cand_feats.push_back(feats_f[q]);
        }
        const NodeRef weights = t.softmax(t.concat(scores));
        const NodeRef ctx = t.weighted_sum(weights, cand_feats);
        const NodeRef soft_off = t.weighted_sum(weights, offsets);  // mm

        // The decoder sees the soft offset normalized by the correlation
        // length; the final layer gets the raw mm offset (so the zero-init
        // skip can learn the identity-toward-correspondence map directly)
        // plus the hidden features scaled back to mm reach.
        const double inv_tau[1] = {1.0 / mc.cfg.corr_length_mm};
        const NodeRef soft_off_n = t.lin_comb({inv_tau, 1}, {&soft_off, 1});
        const NodeRef dec_in[3] = {feats_m[i], ctx, soft_off_n};
        const NodeRef hid = mc.act(t.affine(t.concat({dec_in, 3}), dec.w3, dec.b3, w));
        const double tau[1] = {mc.cfg.corr_length_mm};
        const NodeRef hid_mm = t.lin_comb({tau, 1}, {&hid, 1});
        const NodeRef fin_in[2] = {soft_off, hid_mm};
        const NodeRef res = t.affine(t.concat({fin_in, 2}), dec.w4, dec.b4, 3);

        if (upsampled) {
            const double ones[2] = {1.0, 1.0};
            const NodeRef parts[2] = {(*upsampled)[i], res};
            out.push_back(t.lin_comb({ones, 2}, {parts, 2}));
        } else {
            out.push_back(res);
        }
    }
    return out;
}

ScalePrediction make_prediction(Tape& tape, std::vector<std::size_t> indices,
                                std::vector<NodeRef> nodes) {
    std::vector<Vec3> values;
    values.reserve(nodes.size());
    for (NodeRef n : nodes) values.push_back(tape.value_vec3(n));
    return ScalePrediction{std::move(indices), std::move(nodes), DisplacementField(std::move(values))};
}

}  // namespace

ForwardPass forward(const ModelParameters& params, const PointCloud& moving,
                    const PointCloud& fixed, const ModelConfig& cfg) {
    cfg.validate();
    const ParamLayout layout = param_layout(cfg);
    if (params.size() != layout.total)
        throw std::invalid_argument("forward: parameter vector does not match the config layout");

    ForwardPass fp{Tape({params.values().data(), params.size()}), {}};
    ModelContext mc{cfg, layout, fp.tape};

    std::vector<std::size_t> all(moving.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    if (cfg.scales == 1) {
        auto nodes = predict_scale(mc, moving, fixed, layout.decoders[0], nullptr);
        fp.scales.push_back(make_prediction(fp.tape, std::move(all), std::move(nodes)));
        return fp;
    }

    // Coarse scale on farthest-point subsets of both clouds.
    const auto idx_m = farthest_point_indices(moving, static_cast<std::size_t>(cfg.coarse_points));
    const auto idx_f = farthest_point_indices(fixed, static_cast<std::size_t>(cfg.coarse_points));
    const PointCloud coarse_moving = moving.subset(idx_m);
    const PointCloud coarse_fixed = fixed.subset(idx_f);
    auto coarse_nodes = predict_scale(mc, coarse_moving, coarse_fixed, layout.decoders[0], nullptr);

    // Gaussian upsample of the coarse prediction to every moving point; the
    // kernel weights depend on positions only, so this is a constant linear
    // map of the coarse nodes.
    std::vector<NodeRef> upsampled;
    upsampled.reserve(moving.size());
    std::vector<double> weights;
    std::vector<double> cs;
    std::vector<NodeRef> srcs;
    for (std::size_t i = 0; i < moving.size(); ++i) {
        gaussian_weights(coarse_moving, moving[i], cfg.upsample_sigma_mm, weights);
        cs.clear();
        srcs.clear();
        for (std::size_t s = 0; s < weights.size(); ++s) {
            if (weights[s] != 0.0) {
                cs.push_back(weights[s]);
                srcs.push_back(coarse_nodes[s]);
            }
        }
        upsampled.push_back(fp.tape.lin_comb(cs, srcs));
    }

    auto fine_nodes = predict_scale(mc, moving, fixed, layout.decoders[1], &upsampled);
    fp.scales.push_back(make_prediction(fp.tape, std::move(idx_m), std::move(coarse_nodes)));
    fp.scales.push_back(make_prediction(fp.tape, std::move(all), std::move(fine_nodes)));
    return fp;
}

}  // namespace pcreg
