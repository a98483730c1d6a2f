#include "parnn/pretrain.hpp"

#include <cmath>

#include "parnn/error.hpp"

namespace parnn {

RbmParams rbm_init(std::size_t visible, std::size_t hidden, VisibleKind kind,
                   Rng& rng) {
    if (visible == 0 || hidden == 0) {
        fail("rbm_init: zero dimension (visible ", visible, ", hidden ", hidden, ")");
    }
    RbmParams rbm;
    rbm.weights = Matrix(hidden, visible);
    for (double& w : rbm.weights.data()) w = rng.gaussian(0.0, 0.01);
    rbm.v_bias.assign(visible, 0.0);
    rbm.h_bias.assign(hidden, 0.0);
    rbm.visible_kind = kind;
    return rbm;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_batch(const RbmParams& rbm, const Matrix& batch, const char* who) {
    if (batch.cols() != rbm.visible_dim()) {
        fail(who, ": batch has ", batch.cols(), " columns, RBM expects ",
             rbm.visible_dim());
    }
    if (batch.rows() == 0) fail(who, ": empty batch");
}

} // namespace

Matrix hidden_probs(const RbmParams& rbm, const Matrix& visible) {
    check_batch(rbm, visible, "hidden_probs");
    Matrix z = matmul_nt(visible, rbm.weights); // B x d_hidden
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double* r = z.row_ptr(i);
        for (std::size_t j = 0; j < z.cols(); ++j) r[j] = sigmoid(r[j] + rbm.h_bias[j]);
    }
    return z;
}

Matrix reconstruct_mean(const RbmParams& rbm, const Matrix& hidden) {
    if (hidden.cols() != rbm.hidden_dim()) {
        fail("reconstruct_mean: hidden has ", hidden.cols(), " columns, RBM expects ",
             rbm.hidden_dim());
    }
    Matrix v = matmul(hidden, rbm.weights); // B x d_visible
    for (std::size_t i = 0; i < v.rows(); ++i) {
        double* r = v.row_ptr(i);
        for (std::size_t j = 0; j < v.cols(); ++j) {
            r[j] += rbm.v_bias[j];
            if (rbm.visible_kind == VisibleKind::bernoulli) r[j] = sigmoid(r[j]);
        }
    }
    return v;
}

Matrix sample_bernoulli(const Matrix& probs, Rng& rng) {
    Matrix s(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        s.data()[i] = rng.uniform() < probs.data()[i] ? 1.0 : 0.0;
    }
    return s;
}

Matrix threshold_half(const Matrix& probs) {
    Matrix s(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        s.data()[i] = probs.data()[i] > 0.5 ? 1.0 : 0.0;
    }
    return s;
}

Cd1Trace cd1_gibbs(const RbmParams& rbm, const Matrix& batch, Rng& rng) {
    check_batch(rbm, batch, "cd1_gibbs");
    Cd1Trace trace;
    trace.pos_hidden = hidden_probs(rbm, batch);
    trace.hidden_sample = sample_bernoulli(trace.pos_hidden, rng);
    trace.recon = reconstruct_mean(rbm, trace.hidden_sample);
    trace.neg_hidden = hidden_probs(rbm, trace.recon);
    return trace;
}

RbmParams cd1_apply(const RbmParams& rbm, const Matrix& batch, const Cd1Trace& trace,
                    double lr) {
    check_batch(rbm, batch, "cd1_apply");
    if (!trace.pos_hidden.same_shape(trace.neg_hidden) ||
        trace.pos_hidden.cols() != rbm.hidden_dim() ||
        trace.pos_hidden.rows() != batch.rows() || !trace.recon.same_shape(batch)) {
        fail("cd1_apply: trace shapes do not match batch ", batch.rows(), "x",
             batch.cols(), " and RBM ", rbm.hidden_dim(), "x", rbm.visible_dim());
    }
    const double scale = lr / static_cast<double>(batch.rows());
    RbmParams out = rbm;

    const Matrix pos = matmul_tn(trace.pos_hidden, batch);       // d_h x d_v
    const Matrix neg = matmul_tn(trace.neg_hidden, trace.recon); // d_h x d_v
    for (std::size_t i = 0; i < out.weights.size(); ++i) {
        out.weights.data()[i] += scale * (pos.data()[i] - neg.data()[i]);
    }
    for (std::size_t j = 0; j < out.v_bias.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < batch.rows(); ++i) {
            acc += batch(i, j) - trace.recon(i, j);
        }
        out.v_bias[j] += scale * acc;
    }
    for (std::size_t j = 0; j < out.h_bias.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < batch.rows(); ++i) {
            acc += trace.pos_hidden(i, j) - trace.neg_hidden(i, j);
        }
        out.h_bias[j] += scale * acc;
    }
    return out;
}

RbmParams cd1_update(const RbmParams& rbm, const Matrix& batch, double lr, Rng& rng) {
    return cd1_apply(rbm, batch, cd1_gibbs(rbm, batch, rng), lr);
}

double reconstruction_error(const RbmParams& rbm, const Matrix& batch) {
    check_batch(rbm, batch, "reconstruction_error");
    const Matrix recon = reconstruct_mean(rbm, hidden_probs(rbm, batch));
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double d = batch.data()[i] - recon.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(batch.size());
}

namespace {

// B-row slices of data in shuffled order, remainder dropped.
std::vector<Matrix> feature_batches(const Matrix& data, std::size_t batch_size,
                                    Rng& rng) {
    std::vector<std::size_t> idx(data.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    const std::size_t count = data.rows() / batch_size;
    std::vector<Matrix> batches;
    batches.reserve(count);
    for (std::size_t b = 0; b < count; ++b) {
        Matrix m(batch_size, data.cols());
        for (std::size_t i = 0; i < batch_size; ++i) {
            const double* src = data.row_ptr(idx[b * batch_size + i]);
            std::copy(src, src + data.cols(), m.row_ptr(i));
        }
        batches.push_back(std::move(m));
    }
    return batches;
}

} // namespace

MlpModel greedy_pretrain(const std::vector<std::size_t>& dims, const Matrix& data,
                         const PretrainOptions& opts, Activation activation,
                         Rng& rng) {
    if (dims.size() < 2) fail("greedy_pretrain: need at least 2 dims");
    if (data.cols() != dims.front()) {
        fail("greedy_pretrain: data has ", data.cols(), " columns, dims expect ",
             dims.front());
    }
    if (opts.batch_size == 0) fail("greedy_pretrain: batch size must be >= 1");
    const std::size_t batch_size =
        opts.batch_size > data.rows() ? data.rows() : opts.batch_size;

    MlpModel model;
    model.layer_dims = dims;
    model.activation = activation;

    Matrix layer_input = data;
    for (std::size_t l = 0; l + 2 < dims.size(); ++l) {
        const VisibleKind kind = l == 0 ? VisibleKind::gaussian : VisibleKind::bernoulli;
        const double lr = kind == VisibleKind::gaussian ? opts.lr_gaussian
                                                        : opts.lr_bernoulli;
        RbmParams rbm = rbm_init(dims[l], dims[l + 1], kind, rng);
        for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
            for (const Matrix& batch : feature_batches(layer_input, batch_size, rng)) {
                rbm = cd1_update(rbm, batch, lr, rng);
            }
        }
        // Next layer sees hidden probabilities, not samples.
        layer_input = hidden_probs(rbm, layer_input);
        LayerParams p;
        p.weights = std::move(rbm.weights);
        p.bias = std::move(rbm.h_bias);
        model.layers.push_back(std::move(p));
    }

    // Output layer: plain random init.
    const std::size_t d_in = dims[dims.size() - 2];
    const std::size_t d_out = dims.back();
    const double r = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
    LayerParams out;
    out.weights = Matrix(d_out, d_in);
    for (double& w : out.weights.data()) w = rng.uniform(-r, r);
    out.bias.assign(d_out, 0.0);
    model.layers.push_back(std::move(out));
    return model;
}

} // namespace parnn
