#ifndef PARNN_OPTIMIZER_HPP
#define PARNN_OPTIMIZER_HPP

#include <cstddef>

#include "parnn/matrix.hpp"
#include "parnn/network.hpp"

namespace parnn {

/// One plain SGD step: p <- p - lr * grad. Throws if any gradient entry
/// is non-finite, naming the layer.
MlpModel sgd_step(const MlpModel& model, const GradientSet& grads, double lr);
void sgd_step_in_place(MlpModel& model, const GradientSet& grads, double lr);

/// Running Kronecker factors for one layer: second moments of the layer
/// inputs (r_in, d_in x d_in) and of the per-example pre-activation
/// derivatives (r_out, d_out x d_out). Stored bias-corrected, i.e. after
/// t updates each factor is the normalized exponential moving average of
/// the per-batch moment matrices, so the very first update leaves
/// exactly that batch's A^T A / B.
struct NgLayerState {
    Matrix r_in;
    Matrix r_out;
    std::size_t update_count = 0;
};

/// Per-layer preconditioner state. decay is the EMA rho, smoothing the
/// alpha that sets the identity floor lambda = alpha * tr(R) / dim.
struct NgState {
    std::vector<NgLayerState> layers;
    double decay = 0.95;
    double smoothing = 4.0;
};

NgState ng_init(const MlpModel& model, double decay = 0.95, double smoothing = 4.0);

/// Folds one minibatch into the running factors:
///   r_in  <-EMA  A^T A / B   (A = layer input activations)
///   r_out <-EMA  D^T D / B   (D = per-example pre-activation derivatives)
void ng_update_state(NgState& state, const ForwardTrace& trace,
                     const BackpropContext& ctx);

/// S_out^-1 * g * S_in^-1 via two Cholesky solves, no rescaling.
Matrix sandwich_solve(const Matrix& s_out, const Matrix& g, const Matrix& s_in);

/// Smoothed factor S = R + lambda*I with lambda = smoothing*tr(R)/dim,
/// floored at 1e-8 so S stays positive definite at cold start.
Matrix smoothed_factor(const Matrix& r, double smoothing);

/// Natural-gradient preconditioning. Per layer the weight gradient
/// becomes gamma * S_out^-1 G S_in^-1 with gamma chosen so the Frobenius
/// norm of the output equals the input's; the bias gradient is solved
/// against S_out with its own gamma.
GradientSet ng_precondition(const NgState& state, const GradientSet& grads);

enum class LrVariant { newbob, exponential };

LrVariant lr_variant_from_string(const std::string& s);
std::string to_string(LrVariant v);

/// Learning rate schedule state. Newbob halves once cross-validation
/// improvement drops below halve_threshold and keeps halving every epoch
/// after that; it stops when, while halving, improvement drops below
/// stop_threshold. The exponential schedule decays lr_init towards
/// final_ratio * lr_init as training progress goes 0 -> 1.
struct LrSchedule {
    LrVariant variant = LrVariant::exponential;
    double lr_init = 0.32;

    double halve_threshold = 0.005;
    double stop_threshold = 0.001;
    bool halving_active = false;
    double newbob_lr = 0.32;

    double final_ratio = 0.01;
    std::size_t planned_epochs = 15;
};

LrSchedule make_schedule(LrVariant variant, double lr_init,
                         std::size_t planned_epochs);

struct NewbobDecision {
    double lr;
    bool stop;
};

/// Advances Newbob state given the previous and current epoch CV
/// accuracies (both in [0,1]).
NewbobDecision newbob_next(LrSchedule& sched, double prev_cv_acc, double cv_acc);

/// lr_init * final_ratio^progress for progress in [0,1].
double exponential_lr(const LrSchedule& sched, double progress);

/// Worker-proportional initial learning rate: lr_init * workers.
double scale_lr_for_workers(double lr_init, std::size_t workers);

} // namespace parnn

#endif
