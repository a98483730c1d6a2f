#ifndef PARNN_NETWORK_HPP
#define PARNN_NETWORK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "parnn/matrix.hpp"
#include "parnn/rng.hpp"

namespace parnn {

using Labels = std::vector<int>;

enum class Activation { sigmoid, tanh };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct LayerParams {
    Matrix weights; // d_out x d_in
    Vector bias;    // d_out
};

/// Feed-forward classifier. Hidden layers use the configured activation,
/// the output layer is always softmax.
struct MlpModel {
    std::vector<std::size_t> layer_dims; // input, hidden..., output
    Activation activation = Activation::sigmoid;
    std::vector<LayerParams> layers;     // layer_dims.size() - 1 entries

    std::size_t num_layers() const { return layers.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
};

/// Everything forward computes, kept for backprop: the input batch,
/// per-layer pre-activations and per-layer activations (the last
/// activation being the softmax probabilities).
struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> pre_activations; // z_l, B x d_out(l)
    std::vector<Matrix> activations;     // act(z_l); softmax for the last
};

/// Gradients of the mean cross-entropy loss, shape-congruent with the model.
struct GradientSet {
    std::vector<LayerParams> layers; // weights := dL/dW, bias := dL/db

    bool all_finite() const;
};

/// Per-layer, per-example pre-activation derivatives dl_i/dz_l (no 1/B
/// factor), as needed by the natural-gradient factor estimates.
struct BackpropContext {
    std::vector<Matrix> dz; // B x d_out(l) per layer
};

/// Model parameters flattened into one vector. Canonical order: layer 0
/// weights row-major, layer 0 bias, layer 1 weights, ... This is the
/// unit of averaging, all-reduce and checkpointing.
struct ParamVector {
    Vector data;

    std::size_t size() const { return data.size(); }
};

std::size_t param_count(const std::vector<std::size_t>& dims);

/// Glorot-uniform weights, zero biases.
MlpModel init_random(const std::vector<std::size_t>& dims, Activation activation,
                     Rng& rng);

ForwardTrace forward(const MlpModel& model, const Matrix& inputs);

/// Mean over the batch of -log p(label).
double cross_entropy(const ForwardTrace& trace, const Labels& labels);

GradientSet backward(const MlpModel& model, const ForwardTrace& trace,
                     const Labels& labels);

/// backward plus the per-layer derivative matrices for NG-SGD.
GradientSet backward_with_context(const MlpModel& model, const ForwardTrace& trace,
                                  const Labels& labels, BackpropContext& ctx);

ParamVector flatten(const MlpModel& model);
MlpModel unflatten(const ParamVector& pv, const MlpModel& shape_template);

/// Fraction of rows whose argmax matches the label.
double accuracy(const MlpModel& model, const Matrix& features, const Labels& labels);

/// Binary checkpoint: magic, version, activation, dims, then the
/// ParamVector as little-endian 64-bit floats. Round-trips bit-exactly.
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

} // namespace parnn

#endif
