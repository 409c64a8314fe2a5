#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lsc/assignment.hpp"
#include "lsc/nn_core.hpp"

namespace lsc {

enum class LossKind { cosine, euclidean, ce };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& text);

struct SyntheticDatasetSpec {
    std::int64_t n_classes = 0;
    int input_dim = 64;
    int samples_per_class = 50;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

struct Dataset {
    Matrix inputs;
    std::vector<std::int64_t> labels;
};

/// Class centers drawn uniformly on the unit sphere (seeded); each sample
/// is its center plus noise_sigma * standard normal. Class-balanced.
Dataset make_blobs(const SyntheticDatasetSpec& spec);

struct LossResult {
    double value = 0.0;
    Matrix grad; // wrt embeddings (cosine/euclidean) or logits (ce)
};

/// mean_i (1 - cossim(e_i, t_i)); embedding norms are clamped at 1e-12 and
/// clamp events are counted in `degenerate_rows` when provided.
LossResult cosine_loss(const Matrix& embeddings, const Matrix& targets,
                       int* degenerate_rows = nullptr);

/// mean_i ||e_i - t_i||^2.
LossResult euclidean_loss(const Matrix& embeddings, const Matrix& targets);

/// Mean softmax cross-entropy; gradient is (softmax - onehot)/B.
LossResult ce_loss(const Matrix& logits, const std::vector<std::int64_t>& labels);

struct DivergencePolicy {
    double multiplier = 10.0; // relative to the first epoch's loss
    int patience = 3;         // consecutive epochs above the bound
};

struct TrainConfig {
    std::string label = "21";
    int n = 0; // 0 -> n_min for the dataset's class count
    AssignStrategy strategy = AssignStrategy::sequential;
    std::uint64_t assignment_seed = 0;

    std::vector<int> hidden = {256, 256};
    LossKind loss = LossKind::cosine;
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::uint64_t seed = 0;
    DivergencePolicy divergence;
    SyntheticDatasetSpec dataset;
};

struct EpochRow {
    int epoch = 0; // 1-based
    double loss = 0.0;
    double accuracy = 0.0;
    double learning_rate = 0.0;
    std::int64_t wall_ms = 0;
    bool diverged = false;
};

struct RunMetrics {
    std::vector<EpochRow> rows;
    std::uint64_t config_hash = 0;
    bool diverged = false;
};

struct TrainResult {
    RunMetrics metrics;
    MLPModel model;
    AssignmentTable table;
};

std::uint64_t config_hash(const TrainConfig& config);

/// The LSC loop: fixed targets from the assignment table, seeded epoch
/// shuffling, nearest-target eval on a held-out 10% stratified split (or
/// argmax logits in CE mode). Divergence: NaN, or loss above
/// first-epoch-loss * multiplier for `patience` consecutive epochs.
TrainResult train(const TrainConfig& config);

/// Scales every loss by the curve maximum so the max becomes 1. All-zero
/// curves are left untouched.
void normalize_curve(RunMetrics& metrics);

/// First 1-based epoch whose eval accuracy reaches `threshold`.
std::optional<int> epochs_to_accuracy(const RunMetrics& metrics, double threshold);

/// Metrics CSV: header `epoch,loss,accuracy,lr,wall_ms,diverged`, loss and
/// accuracy at 9 significant digits.
void save_metrics(const RunMetrics& metrics, const std::filesystem::path& path);
RunMetrics load_metrics(const std::filesystem::path& path);

} // namespace lsc
