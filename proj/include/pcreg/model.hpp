#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcreg/point_cloud.hpp"
#include "pcreg/tape.hpp"

namespace pcreg {

// Compact cost-volume registration model. Per point: local features from
// k-NN relative offsets (shared nonlinear map + max-pool), soft correlation
// against the k nearest fixed points, and a decoder emitting one 3-D
// displacement. With two scales, a coarse prediction on farthest-point
// subsamples is Gaussian-upsampled to the full cloud and refined by a
// residual decoder.
struct ModelConfig {
    int k = 8;                  // neighborhood size (features and correlation)
    int feature_width = 24;
    int scales = 1;             // 1 or 2
    int coarse_points = 256;    // subsample size of the coarse scale
    bool tanh_activation = true;  // false selects ReLU
    double corr_length_mm = 10.0;   // distance scale of the correlation softmax
    double upsample_sigma_mm = 10.0;  // Gaussian kernel of the coarse-to-fine upsample
    std::uint64_t init_seed = 1;

    void validate() const;
    std::size_t param_count() const;
    std::string canonical_string() const;
    std::uint64_t hash() const;
};

// Row-major offset map of the flat parameter vector.
struct ParamLayout {
    std::size_t w1, b1;  // encoder layer 1: feature_width x 3
    std::size_t w2, b2;  // encoder layer 2: feature_width x feature_width
    struct Decoder {
        std::size_t w3, b3;  // hidden: feature_width x (2*feature_width + 3)
        std::size_t w4, b4;  // final (zero-initialized): 3 x (feature_width + 3)
    };
    std::vector<Decoder> decoders;  // one per scale, coarse first
    std::size_t total;
};

ParamLayout param_layout(const ModelConfig& cfg);

// Flat model parameter vector; layout fixed by ModelConfig. Values live in
// double precision in memory (checkpoints quantize to 32-bit floats).
class ModelParameters {
  public:
    ModelParameters() = default;
    explicit ModelParameters(std::vector<double> values) : values_(std::move(values)) {}

    // Seeded init: uniform weights scaled by 1/sqrt(fan_in), zero biases, and
    // a zero final decoder layer so the initial model is the identity
    // registration (phi_hat = 0).
    static ModelParameters initialize(const ModelConfig& cfg);

    std::size_t size() const { return values_.size(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

  private:
    std::vector<double> values_;
};

// Prediction of one scale: displacement nodes for the listed subset of the
// moving cloud (the finest scale lists every point in order).
struct ScalePrediction {
    std::vector<std::size_t> indices;  // into the moving cloud
    std::vector<NodeRef> nodes;        // width-3 node per listed point
    DisplacementField values;          // detached copy of the node values
};

// Result of one differentiable forward pass. The tape owns every node; the
// finest-scale field is duplicated as plain values for non-gradient use.
struct ForwardPass {
    Tape tape;
    std::vector<ScalePrediction> scales;  // coarse first, finest last

    const DisplacementField& field() const { return scales.back().values; }
};

// phi_hat = f(moving, fixed; params). Deterministic given its arguments;
// permutation-equivariant over moving points (neighbor sets and orders are
// canonical, independent of input point order).
ForwardPass forward(const ModelParameters& params, const PointCloud& moving,
                    const PointCloud& fixed, const ModelConfig& cfg);

// Farthest-point subsample of size min(count, N). Starts from the
// lexicographically smallest point and breaks distance ties canonically, so
// the selected set does not depend on the input order.
std::vector<std::size_t> farthest_point_indices(const PointCloud& cloud, std::size_t count);

}  // namespace pcreg
