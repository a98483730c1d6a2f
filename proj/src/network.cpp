#include "parnn/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "parnn/error.hpp"

namespace parnn {

Activation activation_from_string(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    fail("activation: expected 'sigmoid' or 'tanh', got '", s, "'");
}

std::string to_string(Activation a) {
    return a == Activation::sigmoid ? "sigmoid" : "tanh";
}

bool GradientSet::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weights.all_finite()) return false;
        for (double b : l.bias) {
            if (!std::isfinite(b)) return false;
        }
    }
    return true;
}

std::size_t param_count(const std::vector<std::size_t>& dims) {
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        total += dims[l + 1] * dims[l] + dims[l + 1];
    }
    return total;
}

MlpModel init_random(const std::vector<std::size_t>& dims, Activation activation,
                     Rng& rng) {
    if (dims.size() < 2) fail("init_random: need at least 2 dims, got ", dims.size());
    for (std::size_t d : dims) {
        if (d == 0) fail("init_random: zero layer dimension");
    }
    MlpModel model;
    model.layer_dims = dims;
    model.activation = activation;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t d_in = dims[l];
        const std::size_t d_out = dims[l + 1];
        const double r = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
        LayerParams p;
        p.weights = Matrix(d_out, d_in);
        for (double& w : p.weights.data()) w = rng.uniform(-r, r);
        p.bias.assign(d_out, 0.0);
        model.layers.push_back(std::move(p));
    }
    return model;
}

namespace {

double activate(Activation a, double z) {
    if (a == Activation::sigmoid) return 1.0 / (1.0 + std::exp(-z));
    return std::tanh(z);
}

// Derivative expressed through the activation value.
double activate_grad(Activation a, double act) {
    if (a == Activation::sigmoid) return act * (1.0 - act);
    return 1.0 - act * act;
}

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& z) {
    Matrix p(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const double* zr = z.row_ptr(i);
        double* pr = p.row_ptr(i);
        double zmax = zr[0];
        for (std::size_t j = 1; j < z.cols(); ++j) zmax = std::max(zmax, zr[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < z.cols(); ++j) {
            pr[j] = std::exp(zr[j] - zmax);
            denom += pr[j];
        }
        const double inv = 1.0 / denom;
        for (std::size_t j = 0; j < z.cols(); ++j) pr[j] *= inv;
    }
    return p;
}

Matrix affine(const Matrix& x, const LayerParams& p) {
    Matrix z = matmul_nt(x, p.weights); // B x d_out
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double* zr = z.row_ptr(i);
        for (std::size_t j = 0; j < z.cols(); ++j) zr[j] += p.bias[j];
    }
    return z;
}

void check_labels(const Labels& labels, std::size_t batch, std::size_t classes,
                  const char* who) {
    if (labels.size() != batch) {
        fail(who, ": label count ", labels.size(), " does not match batch size ",
             batch);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
            fail(who, ": label ", labels[i], " at row ", i, " out of range [0, ",
                 classes, ")");
        }
    }
}

} // namespace

ForwardTrace forward(const MlpModel& model, const Matrix& inputs) {
    if (inputs.cols() != model.input_dim()) {
        fail("forward: input has ", inputs.cols(), " columns, model expects ",
             model.input_dim());
    }
    ForwardTrace trace;
    trace.input = inputs;
    const Matrix* x = &trace.input;
    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        Matrix z = affine(*x, model.layers[l]);
        Matrix a;
        if (l + 1 == model.num_layers()) {
            a = softmax_rows(z);
        } else {
            a = Matrix(z.rows(), z.cols());
            for (std::size_t i = 0; i < z.size(); ++i) {
                a.data()[i] = activate(model.activation, z.data()[i]);
            }
        }
        trace.pre_activations.push_back(std::move(z));
        trace.activations.push_back(std::move(a));
        x = &trace.activations.back();
    }
    return trace;
}

double cross_entropy(const ForwardTrace& trace, const Labels& labels) {
    if (trace.pre_activations.empty()) fail("cross_entropy: empty trace");
    const Matrix& z = trace.pre_activations.back();
    check_labels(labels, z.rows(), z.cols(), "cross_entropy");
    // log p(label) = z_label - logsumexp(z), computed stably per row.
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const double* zr = z.row_ptr(i);
        double zmax = zr[0];
        for (std::size_t j = 1; j < z.cols(); ++j) zmax = std::max(zmax, zr[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < z.cols(); ++j) denom += std::exp(zr[j] - zmax);
        total -= zr[labels[i]] - zmax - std::log(denom);
    }
    return total / static_cast<double>(z.rows());
}

namespace {

GradientSet backward_impl(const MlpModel& model, const ForwardTrace& trace,
                          const Labels& labels, BackpropContext* ctx) {
    const std::size_t L = model.num_layers();
    if (trace.activations.size() != L || trace.pre_activations.size() != L) {
        fail("backward: trace depth ", trace.activations.size(),
             " does not match model layer count ", L);
    }
    if (trace.input.cols() != model.input_dim()) {
        fail("backward: trace input width ", trace.input.cols(),
             " does not match model input dim ", model.input_dim());
    }
    const std::size_t batch = trace.input.rows();
    check_labels(labels, batch, model.output_dim(), "backward");
    for (std::size_t l = 0; l < L; ++l) {
        if (trace.activations[l].cols() != model.layer_dims[l + 1] ||
            trace.activations[l].rows() != batch) {
            fail("backward: trace layer ", l, " has shape ",
                 trace.activations[l].rows(), "x", trace.activations[l].cols(),
                 ", expected ", batch, "x", model.layer_dims[l + 1]);
        }
    }

    GradientSet grads;
    grads.layers.resize(L);
    if (ctx) ctx->dz.assign(L, Matrix());

    const double inv_b = 1.0 / static_cast<double>(batch);

    // dz holds per-example derivatives dl_i/dz; the 1/B mean shows up
    // only when the layer gradients are formed.
    Matrix dz = trace.activations.back(); // softmax probabilities
    for (std::size_t i = 0; i < batch; ++i) {
        dz(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    }

    for (std::size_t l = L; l-- > 0;) {
        const Matrix& layer_input = (l == 0) ? trace.input : trace.activations[l - 1];
        Matrix dw = matmul_tn(dz, layer_input); // d_out x d_in
        scale_in_place(dw, inv_b);
        Vector db(dz.cols(), 0.0);
        for (std::size_t i = 0; i < dz.rows(); ++i) {
            const double* r = dz.row_ptr(i);
            for (std::size_t j = 0; j < dz.cols(); ++j) db[j] += r[j];
        }
        for (double& x : db) x *= inv_b;
        grads.layers[l].weights = std::move(dw);
        grads.layers[l].bias = std::move(db);

        if (ctx) ctx->dz[l] = dz;

        if (l > 0) {
            Matrix da = matmul(dz, model.layers[l].weights); // B x d_in
            const Matrix& prev_act = trace.activations[l - 1];
            for (std::size_t i = 0; i < da.size(); ++i) {
                da.data()[i] *= activate_grad(model.activation, prev_act.data()[i]);
            }
            dz = std::move(da);
        }
    }
    return grads;
}

} // namespace

GradientSet backward(const MlpModel& model, const ForwardTrace& trace,
                     const Labels& labels) {
    return backward_impl(model, trace, labels, nullptr);
}

GradientSet backward_with_context(const MlpModel& model, const ForwardTrace& trace,
                                  const Labels& labels, BackpropContext& ctx) {
    return backward_impl(model, trace, labels, &ctx);
}

ParamVector flatten(const MlpModel& model) {
    ParamVector pv;
    pv.data.reserve(param_count(model.layer_dims));
    for (const auto& layer : model.layers) {
        pv.data.insert(pv.data.end(), layer.weights.data().begin(),
                       layer.weights.data().end());
        pv.data.insert(pv.data.end(), layer.bias.begin(), layer.bias.end());
    }
    return pv;
}

MlpModel unflatten(const ParamVector& pv, const MlpModel& shape_template) {
    const std::size_t expected = param_count(shape_template.layer_dims);
    if (pv.size() != expected) {
        fail("unflatten: vector length ", pv.size(), " does not match model size ",
             expected);
    }
    MlpModel model;
    model.layer_dims = shape_template.layer_dims;
    model.activation = shape_template.activation;
    std::size_t pos = 0;
    for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
        const std::size_t d_in = model.layer_dims[l];
        const std::size_t d_out = model.layer_dims[l + 1];
        LayerParams p;
        p.weights = Matrix(d_out, d_in,
                           std::vector<double>(pv.data.begin() + pos,
                                               pv.data.begin() + pos + d_out * d_in));
        pos += d_out * d_in;
        p.bias.assign(pv.data.begin() + pos, pv.data.begin() + pos + d_out);
        pos += d_out;
        model.layers.push_back(std::move(p));
    }
    return model;
}

double accuracy(const MlpModel& model, const Matrix& features, const Labels& labels) {
    if (features.rows() == 0) fail("accuracy: empty feature matrix");
    const ForwardTrace trace = forward(model, features);
    const Matrix& p = trace.activations.back();
    check_labels(labels, p.rows(), p.cols(), "accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const double* r = p.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < p.cols(); ++j) {
            if (r[j] > r[best]) best = j;
        }
        if (best == static_cast<std::size_t>(labels[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(p.rows());
}

namespace {

constexpr char kMagic[8] = {'P', 'A', 'R', 'N', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double v) {
    write_u64(os, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) fail("load_model: truncated file ", path);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& is, const std::string& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) fail("load_model: truncated file ", path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is, const std::string& path) {
    return std::bit_cast<double>(read_u64(is, path));
}

} // namespace

void save_model(const std::string& path, const MlpModel& model) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail("save_model: cannot open '", path, "' for writing");
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, kVersion);
    write_u32(os, model.activation == Activation::sigmoid ? 0u : 1u);
    write_u32(os, static_cast<std::uint32_t>(model.layer_dims.size()));
    for (std::size_t d : model.layer_dims) write_u64(os, d);
    const ParamVector pv = flatten(model);
    for (double x : pv.data) write_f64(os, x);
    if (!os) fail("save_model: write failed for '", path, "'");
}

MlpModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("load_model: cannot open '", path, "'");
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        fail("load_model: bad magic in '", path, "'");
    }
    const std::uint32_t version = read_u32(is, path);
    if (version != kVersion) fail("load_model: unsupported version ", version);
    const std::uint32_t act = read_u32(is, path);
    if (act > 1) fail("load_model: bad activation code ", act);
    const std::uint32_t ndims = read_u32(is, path);
    if (ndims < 2) fail("load_model: bad dim count ", ndims);
    MlpModel shape;
    shape.activation = act == 0 ? Activation::sigmoid : Activation::tanh;
    for (std::uint32_t i = 0; i < ndims; ++i) {
        shape.layer_dims.push_back(static_cast<std::size_t>(read_u64(is, path)));
    }
    ParamVector pv;
    pv.data.resize(param_count(shape.layer_dims));
    for (double& x : pv.data) x = read_f64(is, path);
    return unflatten(pv, shape);
}

} // namespace parnn
