#include "parnn/optimizer.hpp"

#include <cmath>

#include "parnn/error.hpp"

namespace parnn {

void sgd_step_in_place(MlpModel& model, const GradientSet& grads, double lr) {
    if (grads.layers.size() != model.num_layers()) {
        fail("sgd_step: gradient has ", grads.layers.size(), " layers, model has ",
             model.num_layers());
    }
    if (lr < 0.0) fail("sgd_step: negative learning rate ", lr);
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const auto& g = grads.layers[l];
        auto& p = model.layers[l];
        if (!g.weights.same_shape(p.weights) || g.bias.size() != p.bias.size()) {
            fail("sgd_step: layer ", l, " gradient shape ", g.weights.rows(), "x",
                 g.weights.cols(), " does not match parameters ", p.weights.rows(),
                 "x", p.weights.cols());
        }
        if (!g.weights.all_finite()) {
            fail("sgd_step: non-finite weight gradient in layer ", l);
        }
        for (double b : g.bias) {
            if (!std::isfinite(b)) fail("sgd_step: non-finite bias gradient in layer ", l);
        }
        for (std::size_t i = 0; i < p.weights.size(); ++i) {
            p.weights.data()[i] -= lr * g.weights.data()[i];
        }
        for (std::size_t i = 0; i < p.bias.size(); ++i) {
            p.bias[i] -= lr * g.bias[i];
        }
    }
}

MlpModel sgd_step(const MlpModel& model, const GradientSet& grads, double lr) {
    MlpModel out = model;
    sgd_step_in_place(out, grads, lr);
    return out;
}

NgState ng_init(const MlpModel& model, double decay, double smoothing) {
    if (decay <= 0.0 || decay >= 1.0) fail("ng_init: decay must be in (0,1), got ", decay);
    if (smoothing <= 0.0) fail("ng_init: smoothing must be positive, got ", smoothing);
    NgState state;
    state.decay = decay;
    state.smoothing = smoothing;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        NgLayerState s;
        s.r_in = Matrix(model.layer_dims[l], model.layer_dims[l]);
        s.r_out = Matrix(model.layer_dims[l + 1], model.layer_dims[l + 1]);
        state.layers.push_back(std::move(s));
    }
    return state;
}

namespace {

// Bias-corrected EMA: after t batches the stored factor equals
// sum_i rho^(t-i) (1-rho) C_i / (1 - rho^t). The t = 1 case assigns the
// batch moment directly, which keeps the base case exact.
void ema_update(Matrix& r, const Matrix& batch_moment, double rho, std::size_t t) {
    if (t == 1) {
        r = batch_moment;
        return;
    }
    const double denom = 1.0 - std::pow(rho, static_cast<double>(t));
    const double keep = rho * (1.0 - std::pow(rho, static_cast<double>(t - 1))) / denom;
    const double add = (1.0 - rho) / denom;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r.data()[i] = keep * r.data()[i] + add * batch_moment.data()[i];
    }
}

} // namespace

void ng_update_state(NgState& state, const ForwardTrace& trace,
                     const BackpropContext& ctx) {
    const std::size_t L = state.layers.size();
    if (ctx.dz.size() != L || trace.activations.size() != L) {
        fail("ng_update_state: context depth ", ctx.dz.size(), "/",
             trace.activations.size(), " does not match state depth ", L);
    }
    const std::size_t batch = trace.input.rows();
    if (batch == 0) fail("ng_update_state: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t l = 0; l < L; ++l) {
        auto& s = state.layers[l];
        const Matrix& a = (l == 0) ? trace.input : trace.activations[l - 1];
        const Matrix& d = ctx.dz[l];
        if (a.cols() != s.r_in.rows() || d.cols() != s.r_out.rows()) {
            fail("ng_update_state: layer ", l, " shapes ", a.cols(), "/", d.cols(),
                 " do not match factors ", s.r_in.rows(), "/", s.r_out.rows());
        }
        Matrix c_in = matmul_tn(a, a);
        scale_in_place(c_in, inv_b);
        Matrix c_out = matmul_tn(d, d);
        scale_in_place(c_out, inv_b);
        const std::size_t t = s.update_count + 1;
        ema_update(s.r_in, c_in, state.decay, t);
        ema_update(s.r_out, c_out, state.decay, t);
        s.update_count = t;
    }
}

Matrix smoothed_factor(const Matrix& r, double smoothing) {
    const double dim = static_cast<double>(r.rows());
    double lambda = smoothing * trace(r) / dim;
    if (lambda < 1e-8) lambda = 1e-8;
    Matrix s = r;
    for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += lambda;
    return s;
}

Matrix sandwich_solve(const Matrix& s_out, const Matrix& g, const Matrix& s_in) {
    // S_out^-1 G, then right-multiply by S_in^-1 using symmetry of S_in.
    Matrix left = cholesky_solve(s_out, g);
    return transpose(cholesky_solve(s_in, transpose(left)));
}

GradientSet ng_precondition(const NgState& state, const GradientSet& grads) {
    if (grads.layers.size() != state.layers.size()) {
        fail("ng_precondition: gradient has ", grads.layers.size(),
             " layers, state has ", state.layers.size());
    }
    GradientSet out;
    out.layers.resize(grads.layers.size());
    for (std::size_t l = 0; l < grads.layers.size(); ++l) {
        const auto& s = state.layers[l];
        const auto& g = grads.layers[l];
        if (g.weights.rows() != s.r_out.rows() || g.weights.cols() != s.r_in.rows()) {
            fail("ng_precondition: layer ", l, " gradient ", g.weights.rows(), "x",
                 g.weights.cols(), " does not match factors ", s.r_out.rows(), "x",
                 s.r_in.rows());
        }
        const Matrix s_in = smoothed_factor(s.r_in, state.smoothing);
        const Matrix s_out = smoothed_factor(s.r_out, state.smoothing);

        Matrix ghat = sandwich_solve(s_out, g.weights, s_in);
        const double gamma =
            frobenius_norm(g.weights) / std::max(frobenius_norm(ghat), 1e-20);
        scale_in_place(ghat, gamma);
        out.layers[l].weights = std::move(ghat);

        Matrix bias_col(g.bias.size(), 1, g.bias);
        Matrix bhat = cholesky_solve(s_out, bias_col);
        const double gamma_b =
            frobenius_norm(g.bias) / std::max(frobenius_norm(bhat), 1e-20);
        out.layers[l].bias.resize(g.bias.size());
        for (std::size_t i = 0; i < g.bias.size(); ++i) {
            out.layers[l].bias[i] = gamma_b * bhat(i, 0);
        }
    }
    return out;
}

LrVariant lr_variant_from_string(const std::string& s) {
    if (s == "newbob") return LrVariant::newbob;
    if (s == "exponential") return LrVariant::exponential;
    fail("lr_schedule: expected 'newbob' or 'exponential', got '", s, "'");
}

std::string to_string(LrVariant v) {
    return v == LrVariant::newbob ? "newbob" : "exponential";
}

LrSchedule make_schedule(LrVariant variant, double lr_init,
                         std::size_t planned_epochs) {
    if (lr_init <= 0.0) fail("make_schedule: lr_init must be positive, got ", lr_init);
    if (planned_epochs == 0) fail("make_schedule: planned_epochs must be positive");
    LrSchedule s;
    s.variant = variant;
    s.lr_init = lr_init;
    s.newbob_lr = lr_init;
    s.planned_epochs = planned_epochs;
    return s;
}

NewbobDecision newbob_next(LrSchedule& sched, double prev_cv_acc, double cv_acc) {
    if (prev_cv_acc < 0.0 || prev_cv_acc > 1.0 || cv_acc < 0.0 || cv_acc > 1.0) {
        fail("newbob_next: accuracies must be in [0,1], got ", prev_cv_acc, " and ",
             cv_acc);
    }
    const double improvement = cv_acc - prev_cv_acc;
    bool stop = false;
    if (sched.halving_active) {
        if (improvement < sched.stop_threshold) stop = true;
        sched.newbob_lr *= 0.5;
    } else if (improvement < sched.halve_threshold) {
        sched.halving_active = true;
        sched.newbob_lr *= 0.5;
    }
    return {sched.newbob_lr, stop};
}

double exponential_lr(const LrSchedule& sched, double progress) {
    if (progress < 0.0 || progress > 1.0) {
        fail("exponential_lr: progress must be in [0,1], got ", progress);
    }
    return sched.lr_init * std::pow(sched.final_ratio, progress);
}

double scale_lr_for_workers(double lr_init, std::size_t workers) {
    if (workers == 0) fail("scale_lr_for_workers: workers must be >= 1");
    return lr_init * static_cast<double>(workers);
}

} // namespace parnn
