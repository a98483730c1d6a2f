#ifndef PARNN_PRETRAIN_HPP
#define PARNN_PRETRAIN_HPP

#include <cstddef>

#include "parnn/matrix.hpp"
#include "parnn/network.hpp"
#include "parnn/rng.hpp"

namespace parnn {

enum class VisibleKind { gaussian, bernoulli };

struct RbmParams {
    Matrix weights; // d_hidden x d_visible
    Vector v_bias;  // d_visible
    Vector h_bias;  // d_hidden
    VisibleKind visible_kind = VisibleKind::bernoulli;

    std::size_t visible_dim() const { return weights.cols(); }
    std::size_t hidden_dim() const { return weights.rows(); }
};

/// Small Gaussian random weights, zero biases.
RbmParams rbm_init(std::size_t visible, std::size_t hidden, VisibleKind kind,
                   Rng& rng);

/// P(h=1|v) = sigmoid(v W^T + h_bias), rows are examples.
Matrix hidden_probs(const RbmParams& rbm, const Matrix& visible);

/// Mean-field reconstruction from hidden states: sigmoid(h W + v_bias)
/// for bernoulli visibles, linear h W + v_bias for gaussian visibles.
Matrix reconstruct_mean(const RbmParams& rbm, const Matrix& hidden);

/// One Bernoulli draw per entry.
Matrix sample_bernoulli(const Matrix& probs, Rng& rng);

/// Deterministic stand-in for sampling: 1 where p > 0.5.
Matrix threshold_half(const Matrix& probs);

/// Intermediate quantities of one CD-1 Gibbs step. Tests build these by
/// hand to pin the update against known statistics.
struct Cd1Trace {
    Matrix pos_hidden;    // P(h|v_data)
    Matrix hidden_sample; // sampled h driving the reconstruction
    Matrix recon;         // visible reconstruction
    Matrix neg_hidden;    // P(h|recon)
};

Cd1Trace cd1_gibbs(const RbmParams& rbm, const Matrix& batch, Rng& rng);

/// Applies the CD-1 update for a precomputed trace:
///   W += lr * (pos_hidden^T batch - neg_hidden^T recon) / B
/// with matching mean updates for both bias vectors.
RbmParams cd1_apply(const RbmParams& rbm, const Matrix& batch, const Cd1Trace& trace,
                    double lr);

RbmParams cd1_update(const RbmParams& rbm, const Matrix& batch, double lr, Rng& rng);

/// Mean squared reconstruction error of one mean-field pass.
double reconstruction_error(const RbmParams& rbm, const Matrix& batch);

struct PretrainOptions {
    std::size_t epochs = 10;
    double lr_gaussian = 0.001;
    double lr_bernoulli = 0.1;
    std::size_t batch_size = 128;
};

/// Greedy layerwise stack: a gaussian-bernoulli RBM on the inputs, then
/// bernoulli-bernoulli RBMs on the previous layer's hidden probabilities.
/// Hidden layers of the returned MLP take the RBM weights and hidden
/// biases; the output layer is randomly initialized.
MlpModel greedy_pretrain(const std::vector<std::size_t>& dims, const Matrix& data,
                         const PretrainOptions& opts, Activation activation,
                         Rng& rng);

} // namespace parnn

#endif
