#include "lsc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "lsc/rng.hpp"

namespace lsc {

namespace {

std::uint64_t fnv1a64(std::uint64_t hash, const std::string& text) {
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string format9(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

void fisher_yates(std::vector<std::int64_t>& v, std::mt19937_64& gen) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(gen() % (i + 1));
        std::swap(v[i], v[j]);
    }
}

} // namespace

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::cosine: return "cosine";
        case LossKind::euclidean: return "euclidean";
        case LossKind::ce: return "ce";
    }
    return "?";
}

LossKind loss_kind_from_string(const std::string& text) {
    if (text == "cosine") return LossKind::cosine;
    if (text == "euclidean") return LossKind::euclidean;
    if (text == "ce") return LossKind::ce;
    throw ConfigError("unknown loss '" + text + "'");
}

Dataset make_blobs(const SyntheticDatasetSpec& spec) {
    if (spec.n_classes < 1)
        throw ConfigError("make_blobs: n_classes must be >= 1");
    if (spec.input_dim < 1 || spec.samples_per_class < 1)
        throw ConfigError("make_blobs: input_dim and samples_per_class must be >= 1");
    if (spec.noise_sigma < 0.0)
        throw ConfigError("make_blobs: noise_sigma must be >= 0");

    NormalSampler sampler(spec.seed);
    const std::int64_t total = spec.n_classes * spec.samples_per_class;

    Dataset data;
    data.inputs = Matrix(static_cast<int>(total), spec.input_dim);
    data.labels.reserve(static_cast<std::size_t>(total));

    std::int64_t row = 0;
    std::vector<double> center(static_cast<std::size_t>(spec.input_dim));
    for (std::int64_t c = 0; c < spec.n_classes; ++c) {
        // Normalized Gaussian => uniform direction on the sphere.
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (double& x : center) {
                x = sampler();
                norm_sq += x * x;
            }
        } while (norm_sq <= 1e-24);
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        for (double& x : center) x *= inv_norm;

        for (int s = 0; s < spec.samples_per_class; ++s, ++row) {
            for (int d = 0; d < spec.input_dim; ++d)
                data.inputs.at(static_cast<int>(row), d) =
                    center[static_cast<std::size_t>(d)] +
                    spec.noise_sigma * sampler();
            data.labels.push_back(c);
        }
    }
    return data;
}

LossResult cosine_loss(const Matrix& embeddings, const Matrix& targets,
                       int* degenerate_rows) {
    if (embeddings.rows != targets.rows || embeddings.cols != targets.cols)
        throw ShapeError("cosine_loss: shape mismatch");
    const int batch = embeddings.rows;
    const int dim = embeddings.cols;

    LossResult result;
    result.grad = Matrix(batch, dim);
    double total = 0.0;
    for (int r = 0; r < batch; ++r) {
        double ee = 0.0, et = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double e = embeddings.at(r, d);
            ee += e * e;
            et += e * targets.at(r, d);
        }
        double norm = std::sqrt(ee);
        if (norm < 1e-12) {
            norm = 1e-12;
            if (degenerate_rows) ++(*degenerate_rows);
        }
        const double cs = et / norm;
        total += 1.0 - cs;
        // d(1-cs)/de = -(t/|e| - (e.t) e/|e|^3)
        const double inv = 1.0 / norm;
        const double inv3 = inv * inv * inv;
        for (int d = 0; d < dim; ++d)
            result.grad.at(r, d) =
                -(targets.at(r, d) * inv - et * embeddings.at(r, d) * inv3) / batch;
    }
    result.value = total / batch;
    return result;
}

LossResult euclidean_loss(const Matrix& embeddings, const Matrix& targets) {
    if (embeddings.rows != targets.rows || embeddings.cols != targets.cols)
        throw ShapeError("euclidean_loss: shape mismatch");
    const int batch = embeddings.rows;

    LossResult result;
    result.grad = Matrix(batch, embeddings.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < embeddings.data.size(); ++i) {
        const double diff = embeddings.data[i] - targets.data[i];
        total += diff * diff;
        result.grad.data[i] = 2.0 * diff / batch;
    }
    result.value = total / batch;
    return result;
}

LossResult ce_loss(const Matrix& logits, const std::vector<std::int64_t>& labels) {
    if (static_cast<std::size_t>(logits.rows) != labels.size())
        throw ShapeError("ce_loss: batch size mismatch");
    const int batch = logits.rows;
    const int k = logits.cols;

    LossResult result;
    result.grad = Matrix(batch, k);
    double total = 0.0;
    std::vector<double> probs(static_cast<std::size_t>(k));
    for (int r = 0; r < batch; ++r) {
        const std::int64_t label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= k)
            throw ConfigError("ce_loss: label " + std::to_string(label) +
                              " out of range for " + std::to_string(k) + " classes");
        double max_logit = logits.at(r, 0);
        for (int c = 1; c < k; ++c) max_logit = std::max(max_logit, logits.at(r, c));
        double denom = 0.0;
        for (int c = 0; c < k; ++c) {
            probs[static_cast<std::size_t>(c)] = std::exp(logits.at(r, c) - max_logit);
            denom += probs[static_cast<std::size_t>(c)];
        }
        total += -(logits.at(r, static_cast<int>(label)) - max_logit - std::log(denom));
        for (int c = 0; c < k; ++c) {
            double g = probs[static_cast<std::size_t>(c)] / denom;
            if (c == label) g -= 1.0;
            result.grad.at(r, c) = g / batch;
        }
    }
    result.value = total / batch;
    return result;
}

std::uint64_t config_hash(const TrainConfig& config) {
    std::ostringstream os;
    os << config.label << "|" << config.n << "|" << to_string(config.strategy) << "|"
       << config.assignment_seed << "|";
    for (int h : config.hidden) os << h << ",";
    os << "|" << to_string(config.loss) << "|" << config.epochs << "|"
       << config.batch_size << "|" << format9(config.learning_rate) << "|"
       << (config.optimizer == OptimizerKind::adam ? "adam" : "sgd_momentum") << "|"
       << config.seed << "|" << format9(config.divergence.multiplier) << "|"
       << config.divergence.patience << "|" << config.dataset.n_classes << "|"
       << config.dataset.input_dim << "|" << config.dataset.samples_per_class << "|"
       << format9(config.dataset.noise_sigma) << "|" << config.dataset.seed;
    return fnv1a64(14695981039346656037ULL, os.str());
}

TrainResult train(const TrainConfig& config) {
    if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (config.loss == LossKind::ce && config.dataset.n_classes < 2)
        throw ConfigError("train: CE mode needs at least 2 classes");

    const DLabel label = DLabel::parse(config.label);
    const int n = config.n > 0
                      ? config.n
                      : n_min(label, BigCount(config.dataset.n_classes));
    const VectorSystem system = build_system(label, n);
    AssignmentTable table =
        assign(system, config.dataset.n_classes, config.strategy, config.assignment_seed);

    const Dataset data = make_blobs(config.dataset);

    // Held-out split: 10% per class (at least one sample), seeded.
    std::mt19937_64 split_gen(config.seed ^ 0x5851f42d4c957f2dULL);
    std::vector<std::int64_t> train_idx, eval_idx;
    {
        const int spc = config.dataset.samples_per_class;
        const int held = std::max(1, spc / 10);
        std::vector<std::int64_t> cls(static_cast<std::size_t>(spc));
        for (std::int64_t c = 0; c < config.dataset.n_classes; ++c) {
            std::iota(cls.begin(), cls.end(), c * spc);
            fisher_yates(cls, split_gen);
            for (int i = 0; i < spc; ++i)
                (i < held ? eval_idx : train_idx).push_back(cls[static_cast<std::size_t>(i)]);
        }
    }

    ModelConfig mc;
    mc.input_dim = config.dataset.input_dim;
    mc.hidden = config.hidden;
    mc.embedding_dim = n;
    if (config.loss == LossKind::ce)
        mc.head_classes = static_cast<int>(config.dataset.n_classes);
    MLPModel model = init_model(mc, config.seed);

    OptimizerState opt;
    opt.kind = config.optimizer;
    opt.learning_rate = config.learning_rate;

    Matrix eval_inputs(static_cast<int>(eval_idx.size()), config.dataset.input_dim);
    std::vector<std::int64_t> eval_labels(eval_idx.size());
    for (std::size_t i = 0; i < eval_idx.size(); ++i) {
        for (int d = 0; d < config.dataset.input_dim; ++d)
            eval_inputs.at(static_cast<int>(i), d) =
                data.inputs.at(static_cast<int>(eval_idx[i]), d);
        eval_labels[i] = data.labels[static_cast<std::size_t>(eval_idx[i])];
    }

    TrainResult result;
    result.metrics.config_hash = config_hash(config);

    std::mt19937_64 epoch_gen(config.seed);
    double initial_loss = 0.0;
    int over_bound_streak = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        fisher_yates(train_idx, epoch_gen);

        double loss_sum = 0.0;
        std::int64_t loss_count = 0;
        bool nan_step = false;

        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const int b = static_cast<int>(
                std::min<std::size_t>(config.batch_size, train_idx.size() - start));
            Matrix batch(b, config.dataset.input_dim);
            std::vector<std::int64_t> batch_labels(static_cast<std::size_t>(b));
            for (int r = 0; r < b; ++r) {
                const std::int64_t src = train_idx[start + static_cast<std::size_t>(r)];
                for (int d = 0; d < config.dataset.input_dim; ++d)
                    batch.at(r, d) = data.inputs.at(static_cast<int>(src), d);
                batch_labels[static_cast<std::size_t>(r)] =
                    data.labels[static_cast<std::size_t>(src)];
            }

            const bool with_head = config.loss == LossKind::ce;
            ForwardCache cache = forward(model, batch, with_head);

            LossResult loss;
            if (config.loss == LossKind::ce) {
                loss = ce_loss(*cache.logits, batch_labels);
            } else {
                Matrix targets(b, n);
                for (int r = 0; r < b; ++r) {
                    const auto& t = table.coords[static_cast<std::size_t>(
                        batch_labels[static_cast<std::size_t>(r)])];
                    for (int d = 0; d < n; ++d) targets.at(r, d) = t[static_cast<std::size_t>(d)];
                }
                loss = config.loss == LossKind::cosine
                           ? cosine_loss(cache.embeddings, targets)
                           : euclidean_loss(cache.embeddings, targets);
            }
            loss_sum += loss.value * b;
            loss_count += b;

            try {
                Gradients grads = backward(model, cache, loss.grad);
                step(model, grads, opt);
            } catch (const DivergenceSignal&) {
                nan_step = true;
                break;
            }
        }

        const double epoch_loss = loss_count ? loss_sum / static_cast<double>(loss_count)
                                             : std::nan("");

        // Eval accuracy on the held-out split.
        double accuracy = 0.0;
        if (!nan_step && model.finite()) {
            std::int64_t correct = 0;
            if (config.loss == LossKind::ce) {
                ForwardCache cache = forward(model, eval_inputs, true);
                for (int r = 0; r < cache.logits->rows; ++r) {
                    int best = 0;
                    for (int c = 1; c < cache.logits->cols; ++c)
                        if (cache.logits->at(r, c) > cache.logits->at(r, best)) best = c;
                    if (best == eval_labels[static_cast<std::size_t>(r)]) ++correct;
                }
            } else {
                Matrix emb = forward_embeddings(model, eval_inputs);
                for (int r = 0; r < emb.rows; ++r) {
                    std::span<const double> row(
                        &emb.data[static_cast<std::size_t>(r) * emb.cols],
                        static_cast<std::size_t>(emb.cols));
                    try {
                        if (classify(row, table) == eval_labels[static_cast<std::size_t>(r)])
                            ++correct;
                    } catch (const DegenerateInputError&) {
                        // zero embedding counts as a miss
                    }
                }
            }
            accuracy = eval_idx.empty()
                           ? 0.0
                           : static_cast<double>(correct) / static_cast<double>(eval_idx.size());
        }

        const auto t1 = std::chrono::steady_clock::now();

        EpochRow row;
        row.epoch = epoch;
        row.loss = epoch_loss;
        row.accuracy = accuracy;
        row.learning_rate = config.learning_rate;
        row.wall_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();

        bool diverged_now = nan_step || !std::isfinite(epoch_loss) || !model.finite();
        if (epoch == 1) initial_loss = epoch_loss;
        if (!diverged_now && std::isfinite(initial_loss) &&
            epoch_loss > initial_loss * config.divergence.multiplier) {
            if (++over_bound_streak >= config.divergence.patience) diverged_now = true;
        } else if (!diverged_now) {
            over_bound_streak = 0;
        }

        row.diverged = diverged_now;
        result.metrics.rows.push_back(row);
        if (diverged_now) {
            result.metrics.diverged = true;
            break;
        }
    }

    result.model = std::move(model);
    result.table = std::move(table);
    return result;
}

void normalize_curve(RunMetrics& metrics) {
    if (metrics.rows.empty())
        throw ConfigError("normalize_curve: empty metrics");
    double max_loss = 0.0;
    for (const auto& row : metrics.rows)
        max_loss = std::max(max_loss, row.loss);
    if (max_loss == 0.0) {
        std::cerr << "normalize_curve: all-zero loss curve, leaving unchanged\n";
        return;
    }
    for (auto& row : metrics.rows) row.loss /= max_loss;
}

std::optional<int> epochs_to_accuracy(const RunMetrics& metrics, double threshold) {
    for (const auto& row : metrics.rows)
        if (row.accuracy >= threshold) return row.epoch;
    return std::nullopt;
}

void save_metrics(const RunMetrics& metrics, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_metrics: cannot open " + path.string());
    out << "epoch,loss,accuracy,lr,wall_ms,diverged\n";
    for (const auto& row : metrics.rows)
        out << row.epoch << "," << format9(row.loss) << "," << format9(row.accuracy)
            << "," << format9(row.learning_rate) << "," << row.wall_ms << ","
            << (row.diverged ? 1 : 0) << "\n";
    if (!out) throw Error("save_metrics: write failed");
}

RunMetrics load_metrics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_metrics: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "epoch,loss,accuracy,lr,wall_ms,diverged")
        throw ParseError(path.string() + ":1: bad metrics header");
    RunMetrics metrics;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        EpochRow row;
        int diverged = 0;
        long long wall = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lld,%d", &row.epoch, &row.loss,
                        &row.accuracy, &row.learning_rate, &wall, &diverged) != 6)
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": malformed metrics row");
        row.wall_ms = wall;
        row.diverged = diverged != 0;
        metrics.rows.push_back(row);
        if (row.diverged) metrics.diverged = true;
    }
    return metrics;
}

} // namespace lsc
