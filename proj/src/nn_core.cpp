#include "lsc/nn_core.hpp"

#include "lsc/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <span>
#include <sstream>

namespace lsc {

namespace {

DenseLayer make_layer(int in_dim, int out_dim, Activation act, NormalSampler& sampler) {
    DenseLayer layer;
    layer.weights = Matrix(out_dim, in_dim);
    layer.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    layer.activation = act;
    const double scale = act == Activation::relu
                             ? std::sqrt(2.0 / in_dim)
                             : std::sqrt(2.0 / (in_dim + out_dim));
    for (double& w : layer.weights.data) w = scale * sampler();
    return layer;
}

// out = x * W^T + b, rows are batch samples
Matrix affine(const Matrix& x, const DenseLayer& layer) {
    Matrix out(x.rows, layer.out_dim());
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = &x.data[static_cast<std::size_t>(r) * x.cols];
        double* or_ = &out.data[static_cast<std::size_t>(r) * out.cols];
        for (int o = 0; o < layer.out_dim(); ++o) {
            const double* w = &layer.weights.data[static_cast<std::size_t>(o) * layer.in_dim()];
            double acc = layer.bias[static_cast<std::size_t>(o)];
            for (int i = 0; i < layer.in_dim(); ++i) acc += xr[i] * w[i];
            or_[o] = acc;
        }
    }
    return out;
}

Matrix apply_activation(const Matrix& pre, Activation act) {
    if (act == Activation::identity) return pre;
    Matrix out = pre;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

bool finite(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

struct LayerGrads {
    Matrix d_weights;
    std::vector<double> d_bias;
    Matrix d_input;
};

LayerGrads backprop_layer(const DenseLayer& layer, const Matrix& input,
                          const Matrix& preact, const Matrix& d_output) {
    Matrix d_pre = d_output;
    if (layer.activation == Activation::relu) {
        for (std::size_t i = 0; i < d_pre.data.size(); ++i)
            if (preact.data[i] <= 0.0) d_pre.data[i] = 0.0;
    }

    LayerGrads g;
    g.d_weights = Matrix(layer.out_dim(), layer.in_dim());
    g.d_bias.assign(static_cast<std::size_t>(layer.out_dim()), 0.0);
    g.d_input = Matrix(input.rows, layer.in_dim());

    for (int r = 0; r < input.rows; ++r) {
        const double* xr = &input.data[static_cast<std::size_t>(r) * input.cols];
        const double* dr = &d_pre.data[static_cast<std::size_t>(r) * d_pre.cols];
        double* dxr = &g.d_input.data[static_cast<std::size_t>(r) * g.d_input.cols];
        for (int o = 0; o < layer.out_dim(); ++o) {
            const double d = dr[o];
            g.d_bias[static_cast<std::size_t>(o)] += d;
            double* dw = &g.d_weights.data[static_cast<std::size_t>(o) * layer.in_dim()];
            const double* w = &layer.weights.data[static_cast<std::size_t>(o) * layer.in_dim()];
            for (int i = 0; i < layer.in_dim(); ++i) {
                dw[i] += d * xr[i];
                dxr[i] += d * w[i];
            }
        }
    }
    return g;
}

void sgd_update(std::span<double> param, std::span<const double> grad,
                std::span<double> vel, double lr, double mu) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        vel[i] = mu * vel[i] + grad[i];
        param[i] -= lr * vel[i];
    }
}

void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, const OptimizerState& s,
                 double bias1, double bias2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bias1;
        const double vhat = v[i] / bias2;
        param[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
    }
}

} // namespace

bool MLPModel::finite() const {
    for (const auto& layer : layers)
        if (!lsc::finite(layer.weights) || !lsc::finite(layer.bias)) return false;
    if (head && (!lsc::finite(head->weights) || !lsc::finite(head->bias))) return false;
    return true;
}

MLPModel init_model(const ModelConfig& config, std::uint64_t seed) {
    if (config.input_dim < 1 || config.embedding_dim < 1)
        throw ConfigError("init_model: input_dim and embedding_dim must be positive");
    for (int h : config.hidden)
        if (h < 1) throw ConfigError("init_model: hidden widths must be positive");

    NormalSampler sampler(seed);
    MLPModel model;
    int prev = config.input_dim;
    for (int h : config.hidden) {
        model.layers.push_back(make_layer(prev, h, Activation::relu, sampler));
        prev = h;
    }
    model.layers.push_back(make_layer(prev, config.embedding_dim, Activation::identity, sampler));
    if (config.head_classes) {
        if (*config.head_classes < 1)
            throw ConfigError("init_model: head_classes must be positive");
        model.head = make_layer(config.embedding_dim, *config.head_classes,
                                Activation::identity, sampler);
    }
    return model;
}

ForwardCache forward(const MLPModel& model, const Matrix& batch_inputs, bool with_head) {
    if (model.layers.empty())
        throw ConfigError("forward: model has no layers");
    if (batch_inputs.cols != model.input_dim())
        throw ShapeError("forward: batch width " + std::to_string(batch_inputs.cols) +
                         " != model input dim " + std::to_string(model.input_dim()));
    if (with_head && !model.head)
        throw ConfigError("forward: with_head requested but model has no head");

    ForwardCache cache;
    cache.with_head = with_head;
    Matrix x = batch_inputs;
    for (const auto& layer : model.layers) {
        cache.inputs.push_back(x);
        Matrix pre = affine(x, layer);
        cache.preacts.push_back(pre);
        x = apply_activation(pre, layer.activation);
    }
    cache.embeddings = x;
    if (with_head) {
        cache.inputs.push_back(x);
        Matrix pre = affine(x, *model.head);
        cache.preacts.push_back(pre);
        cache.logits = std::move(pre); // head is identity-activated
    }
    return cache;
}

Matrix forward_embeddings(const MLPModel& model, const Matrix& batch_inputs) {
    if (batch_inputs.cols != model.input_dim())
        throw ShapeError("forward_embeddings: batch width mismatch");
    Matrix x = batch_inputs;
    for (const auto& layer : model.layers)
        x = apply_activation(affine(x, layer), layer.activation);
    return x;
}

Gradients backward(const MLPModel& model, const ForwardCache& cache,
                   const Matrix& output_grad) {
    const std::size_t n_stages = model.layers.size() + (cache.with_head ? 1 : 0);
    if (cache.inputs.size() != n_stages || cache.preacts.size() != n_stages)
        throw Error("backward: cache does not match this model's layer count");

    Gradients grads;
    grads.d_weights.resize(model.layers.size());
    grads.d_bias.resize(model.layers.size());

    Matrix d = output_grad;
    if (cache.with_head) {
        LayerGrads g = backprop_layer(*model.head, cache.inputs.back(),
                                      cache.preacts.back(), d);
        grads.d_head_weights = std::move(g.d_weights);
        grads.d_head_bias = std::move(g.d_bias);
        d = std::move(g.d_input);
    }
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        LayerGrads g = backprop_layer(model.layers[li], cache.inputs[li],
                                      cache.preacts[li], d);
        grads.d_weights[li] = std::move(g.d_weights);
        grads.d_bias[li] = std::move(g.d_bias);
        d = std::move(g.d_input);
    }
    return grads;
}

void step(MLPModel& model, const Gradients& grads, OptimizerState& state) {
    if (grads.d_weights.size() != model.layers.size())
        throw ShapeError("step: gradient count does not match layer count");
    for (std::size_t i = 0; i < grads.d_weights.size(); ++i)
        if (!finite(grads.d_weights[i]) || !finite(grads.d_bias[i]))
            throw DivergenceSignal("step: non-finite gradient in layer " +
                                   std::to_string(i));
    if (grads.d_head_weights &&
        (!finite(*grads.d_head_weights) || !finite(*grads.d_head_bias)))
        throw DivergenceSignal("step: non-finite gradient in head");

    const std::size_t n_params = model.layers.size() + (model.head ? 1 : 0);
    if (state.m_weights.size() != n_params) {
        state.m_weights.assign(n_params, Matrix());
        state.v_weights.assign(n_params, Matrix());
        state.m_bias.assign(n_params, {});
        state.v_bias.assign(n_params, {});
        for (std::size_t i = 0; i < model.layers.size(); ++i) {
            state.m_weights[i] = Matrix(model.layers[i].out_dim(), model.layers[i].in_dim());
            state.v_weights[i] = state.m_weights[i];
            state.m_bias[i].assign(model.layers[i].bias.size(), 0.0);
            state.v_bias[i] = state.m_bias[i];
        }
        if (model.head) {
            state.m_weights.back() = Matrix(model.head->out_dim(), model.head->in_dim());
            state.v_weights.back() = state.m_weights.back();
            state.m_bias.back().assign(model.head->bias.size(), 0.0);
            state.v_bias.back() = state.m_bias.back();
        }
    }

    ++state.t;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    auto update = [&](Matrix& w, std::vector<double>& b, const Matrix& dw,
                      const std::vector<double>& db, std::size_t slot) {
        if (state.kind == OptimizerKind::sgd_momentum) {
            sgd_update(w.data, dw.data, state.m_weights[slot].data,
                       state.learning_rate, state.momentum);
            sgd_update(b, db, state.m_bias[slot], state.learning_rate, state.momentum);
        } else {
            adam_update(w.data, dw.data, state.m_weights[slot].data,
                        state.v_weights[slot].data, state, bias1, bias2);
            adam_update(b, db, state.m_bias[slot], state.v_bias[slot], state,
                        bias1, bias2);
        }
    };

    for (std::size_t i = 0; i < model.layers.size(); ++i)
        update(model.layers[i].weights, model.layers[i].bias, grads.d_weights[i],
               grads.d_bias[i], i);
    if (model.head && grads.d_head_weights)
        update(model.head->weights, model.head->bias, *grads.d_head_weights,
               *grads.d_head_bias, n_params - 1);
}

namespace {

constexpr const char* kCheckpointTag = "# lsc-checkpoint v1";

void write_layer(std::ofstream& out, const DenseLayer& layer) {
    out << (layer.activation == Activation::relu ? "relu" : "identity") << " "
        << layer.out_dim() << " " << layer.in_dim() << "\n";
    char buf[64];
    for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", layer.weights.data[i]);
        out << buf << (i + 1 == layer.weights.data.size() ? "\n" : " ");
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", layer.bias[i]);
        out << buf << (i + 1 == layer.bias.size() ? "\n" : " ");
    }
}

DenseLayer read_layer(std::ifstream& in) {
    std::string act;
    int out_dim = 0, in_dim = 0;
    if (!(in >> act >> out_dim >> in_dim) || out_dim < 1 || in_dim < 1)
        throw ParseError("checkpoint: malformed layer header");
    DenseLayer layer;
    layer.activation = act == "relu" ? Activation::relu : Activation::identity;
    if (act != "relu" && act != "identity")
        throw ParseError("checkpoint: unknown activation '" + act + "'");
    layer.weights = Matrix(out_dim, in_dim);
    layer.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    for (double& w : layer.weights.data)
        if (!(in >> w)) throw ParseError("checkpoint: truncated weights");
    for (double& b : layer.bias)
        if (!(in >> b)) throw ParseError("checkpoint: truncated biases");
    return layer;
}

} // namespace

void save_checkpoint(const MLPModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_checkpoint: cannot open " + path.string());
    out << kCheckpointTag << "\n";
    out << model.layers.size() << " " << (model.head ? 1 : 0) << "\n";
    for (const auto& layer : model.layers) write_layer(out, layer);
    if (model.head) write_layer(out, *model.head);
    if (!out) throw Error("save_checkpoint: write failed");
}

MLPModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_checkpoint: cannot open " + path.string());
    std::string tag;
    std::getline(in, tag);
    if (tag != kCheckpointTag)
        throw ParseError("checkpoint: bad format tag '" + tag + "'");
    std::size_t n_layers = 0;
    int has_head = 0;
    if (!(in >> n_layers >> has_head))
        throw ParseError("checkpoint: missing layer counts");
    MLPModel model;
    for (std::size_t i = 0; i < n_layers; ++i)
        model.layers.push_back(read_layer(in));
    if (has_head) model.head = read_layer(in);
    if (model.layers.empty())
        throw ParseError("checkpoint: no layers");
    return model;
}

} // namespace lsc
