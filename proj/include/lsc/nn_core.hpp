#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lsc/errors.hpp"

namespace lsc {

/// Dense row-major matrix. Reductions are plain sequential loops so a
/// fixed seed and batch order reproduce losses bit for bit.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

enum class Activation { relu, identity };

struct DenseLayer {
    Matrix weights; // out x in
    std::vector<double> bias;
    Activation activation = Activation::identity;

    int in_dim() const { return weights.cols; }
    int out_dim() const { return weights.rows; }
};

/// Layered dense encoder. The final identity layer doubles as the
/// bottleneck that projects down to n_min-sized latent spaces. The head
/// (logits layer) exists only in CE mode; LSC models carry none.
struct MLPModel {
    std::vector<DenseLayer> layers;
    std::optional<DenseLayer> head;

    int input_dim() const { return layers.front().in_dim(); }
    int embedding_dim() const { return layers.back().out_dim(); }
    bool finite() const;
};

struct ModelConfig {
    int input_dim = 64;
    std::vector<int> hidden = {256, 256}; // relu widths
    int embedding_dim = 0;                // final identity layer width
    std::optional<int> head_classes;      // CE mode only
};

/// He-scaled weights for relu layers, Glorot for identity; zero biases.
/// Deterministic per seed (fixed generator and sampling scheme).
MLPModel init_model(const ModelConfig& config, std::uint64_t seed);

struct ForwardCache {
    std::vector<Matrix> inputs;  // per layer (encoder, then head if present)
    std::vector<Matrix> preacts;
    Matrix embeddings;
    std::optional<Matrix> logits;
    bool with_head = false;
};

/// Affine+activation chain; the cache holds everything backward needs.
/// Throws ShapeError when the batch width does not match the first layer.
ForwardCache forward(const MLPModel& model, const Matrix& batch_inputs,
                     bool with_head = false);

/// Inference-only forward, no cache.
Matrix forward_embeddings(const MLPModel& model, const Matrix& batch_inputs);

struct Gradients {
    std::vector<Matrix> d_weights;
    std::vector<std::vector<double>> d_bias;
    std::optional<Matrix> d_head_weights;
    std::optional<std::vector<double>> d_head_bias;
};

/// Reverse-mode gradients of the composed map. `output_grad` is the loss
/// gradient with respect to the logits when the cache came from a
/// with-head forward, otherwise with respect to the embeddings.
Gradients backward(const MLPModel& model, const ForwardCache& cache,
                   const Matrix& output_grad);

enum class OptimizerKind { sgd_momentum, adam };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t t = 0; // adam step counter

    // Moment buffers, lazily sized to mirror the parameters.
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_bias, v_bias;
};

/// One optimizer update in place. Throws DivergenceSignal on a non-finite
/// gradient before touching any parameter.
void step(MLPModel& model, const Gradients& grads, OptimizerState& state);

/// Textual checkpoint: shapes plus row-major parameters at 17 significant
/// digits, under a format-version tag.
void save_checkpoint(const MLPModel& model, const std::filesystem::path& path);
MLPModel load_checkpoint(const std::filesystem::path& path);

} // namespace lsc
