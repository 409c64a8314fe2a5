// lsc: permutation-generated vector systems for latent space configuration.
//
// Subcommands: sysinfo, nmin, gen, train, compare.
// Exit codes: 0 success, 1 usage/config error, 2 capacity error, 3 divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lsc/assignment.hpp"
#include "lsc/training.hpp"
#include "lsc/vector_systems.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCapacity = 2;
constexpr int kExitDiverged = 3;

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    return hash;
}

void print_config_hash(std::uint64_t hash) {
    std::printf("config_hash: %016llx\n", static_cast<unsigned long long>(hash));
}

int cmd_sysinfo(const std::string& label_text, int n) {
    const lsc::DLabel label = lsc::DLabel::parse(label_text);
    print_config_hash(fnv1a64("sysinfo|" + label_text + "|" + std::to_string(n)));

    const auto report = lsc::validate_label(label, n);
    if (!report.ok) {
        std::printf("rule violation: %s\n", report.rule.c_str());
        return kExitUsage;
    }
    const auto system = lsc::build_system(label, n);
    std::printf("system: V_%d^%s\n", n, label.display_name.c_str());
    std::printf("n_vects: %s\n", system.n_vects.str().c_str());
    std::string base = "[";
    for (std::size_t i = 0; i < system.base_vector.size(); ++i) {
        if (i) base += ",";
        base += std::to_string(system.base_vector[i]);
    }
    base += "]";
    std::printf("base_vector: %s%s\n", base.c_str(),
                system.centered ? " (centered by -(n-1)/2)" : "");
    std::printf("vector_norm: %.12g\n", system.vector_norm);
    if (system.mcs)
        std::printf("mcs_analytic: %.12g\n", *system.mcs);
    else
        std::printf("mcs_analytic: unavailable\n");

    if (system.n_vects <= 20000) {
        const auto brute = lsc::mcs_bruteforce(system);
        if (brute.closest_pair)
            std::printf("mcs_closest_pair_bruteforce: %.12g\n", *brute.closest_pair);
        else
            std::printf("mcs_closest_pair_bruteforce: undefined (all pairs antipodal)\n");
        std::printf("min_abs_cossim_literal: %.12g\n", brute.literal_min_abs);
    } else {
        std::printf("mcs_closest_pair_bruteforce: skipped (n_vects above cap 20000)\n");
    }

    if (system.mcs) {
        const double mcs = *system.mcs;
        const bool inside = mcs >= 0.5 && mcs < 0.9;
        std::printf("separation_gate [0.5, 0.9): %s\n",
                    inside ? "inside" : "outside");
    }
    return kExitOk;
}

int cmd_nmin(const std::string& label_text, std::int64_t classes) {
    const lsc::DLabel label = lsc::DLabel::parse(label_text);
    print_config_hash(
        fnv1a64("nmin|" + label_text + "|" + std::to_string(classes)));
    const int n = lsc::n_min(label, lsc::BigCount(classes));
    std::printf("n_min: %d\n", n);
    return kExitOk;
}

int cmd_gen(const std::string& label_text, int n, std::int64_t classes,
            const std::string& strategy_text, std::uint64_t seed,
            const std::string& out) {
    const lsc::DLabel label = lsc::DLabel::parse(label_text);
    print_config_hash(fnv1a64("gen|" + label_text + "|" + std::to_string(n) + "|" +
                              std::to_string(classes) + "|" + strategy_text + "|" +
                              std::to_string(seed)));
    const auto system = lsc::build_system(label, n);
    const auto table = lsc::assign(system, classes,
                                   lsc::assign_strategy_from_string(strategy_text), seed);
    lsc::save_table(table, out);
    std::printf("written: %s\n", out.c_str());
    std::printf("checksum: %016llx\n",
                static_cast<unsigned long long>(lsc::table_checksum(table)));
    return kExitOk;
}

lsc::TrainConfig parse_train_config(const nlohmann::json& j) {
    lsc::TrainConfig config;
    config.label = j.value("label", config.label);
    config.n = j.value("n", config.n);
    if (j.contains("assignment")) {
        const auto& a = j.at("assignment");
        config.strategy =
            lsc::assign_strategy_from_string(a.value("strategy", "sequential"));
        config.assignment_seed = a.value("seed", config.assignment_seed);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (m.contains("hidden")) config.hidden = m.at("hidden").get<std::vector<int>>();
    }
    config.loss = lsc::loss_kind_from_string(j.value("loss", "cosine"));
    config.epochs = j.value("epochs", config.epochs);
    config.batch_size = j.value("batch_size", config.batch_size);
    config.learning_rate = j.value("lr", config.learning_rate);
    const std::string opt = j.value("optimizer", "adam");
    if (opt == "adam")
        config.optimizer = lsc::OptimizerKind::adam;
    else if (opt == "sgd_momentum")
        config.optimizer = lsc::OptimizerKind::sgd_momentum;
    else
        throw lsc::ConfigError("unknown optimizer '" + opt + "'");
    config.seed = j.value("seed", config.seed);
    if (j.contains("divergence")) {
        const auto& d = j.at("divergence");
        config.divergence.multiplier = d.value("multiplier", config.divergence.multiplier);
        config.divergence.patience = d.value("patience", config.divergence.patience);
    }
    if (!j.contains("dataset"))
        throw lsc::ConfigError("train config: missing 'dataset'");
    const auto& d = j.at("dataset");
    if (!d.contains("n_classes"))
        throw lsc::ConfigError("train config: missing 'dataset.n_classes'");
    config.dataset.n_classes = d.at("n_classes").get<std::int64_t>();
    config.dataset.input_dim = d.value("input_dim", config.dataset.input_dim);
    config.dataset.samples_per_class =
        d.value("samples_per_class", config.dataset.samples_per_class);
    config.dataset.noise_sigma = d.value("noise_sigma", config.dataset.noise_sigma);
    config.dataset.seed = d.value("seed", config.dataset.seed);
    return config;
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw lsc::ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw lsc::ConfigError("config file " + path + ": " + e.what());
    }
    return j;
}

struct TrainOverrides {
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> loss;

    void apply(lsc::TrainConfig& config) const {
        if (epochs) config.epochs = *epochs;
        if (lr) config.learning_rate = *lr;
        if (seed) config.seed = *seed;
        if (loss) config.loss = lsc::loss_kind_from_string(*loss);
    }
};

int cmd_train(const std::string& config_path, const TrainOverrides& overrides,
              std::string out_metrics, std::string out_checkpoint) {
    const nlohmann::json j = load_json(config_path);
    lsc::TrainConfig config = parse_train_config(j);
    overrides.apply(config);
    if (out_metrics.empty()) out_metrics = j.value("out_metrics", "metrics.csv");
    if (out_checkpoint.empty()) out_checkpoint = j.value("out_checkpoint", "");

    print_config_hash(lsc::config_hash(config));
    const auto result = lsc::train(config);
    lsc::save_metrics(result.metrics, out_metrics);
    std::printf("metrics: %s\n", out_metrics.c_str());
    if (!out_checkpoint.empty()) {
        lsc::save_checkpoint(result.model, out_checkpoint);
        std::printf("checkpoint: %s\n", out_checkpoint.c_str());
    }
    const auto& last = result.metrics.rows.back();
    std::printf("epochs_run: %zu final_loss: %.9g final_accuracy: %.9g diverged: %d\n",
                result.metrics.rows.size(), last.loss, last.accuracy,
                result.metrics.diverged ? 1 : 0);
    return result.metrics.diverged ? kExitDiverged : kExitOk;
}

int cmd_compare(const std::vector<std::string>& config_paths, double threshold,
                const std::string& out) {
    if (config_paths.size() < 2)
        throw lsc::ConfigError("compare needs at least 2 configs");

    struct Entry {
        std::string name;
        lsc::RunMetrics metrics;
    };
    std::vector<Entry> entries;
    std::string hash_input = "compare";
    for (const auto& path : config_paths) hash_input += "|" + path;
    print_config_hash(fnv1a64(hash_input));

    for (const auto& path : config_paths) {
        const nlohmann::json j = load_json(path);
        lsc::TrainConfig config = parse_train_config(j);
        Entry entry;
        entry.name = j.value("name", std::filesystem::path(path).stem().string());
        const std::string cached = j.value("out_metrics", "");
        if (!cached.empty() && std::filesystem::exists(cached)) {
            entry.metrics = lsc::load_metrics(cached);
        } else {
            entry.metrics = lsc::train(config).metrics;
            if (!cached.empty()) lsc::save_metrics(entry.metrics, cached);
        }
        entries.push_back(std::move(entry));
    }

    // Side-by-side CSV of normalized losses and accuracies.
    std::size_t max_epochs = 0;
    for (auto& entry : entries) {
        max_epochs = std::max(max_epochs, entry.metrics.rows.size());
        lsc::normalize_curve(entry.metrics);
    }
    std::ofstream csv(out);
    if (!csv) throw lsc::Error("cannot open " + out);
    csv << "epoch";
    for (const auto& entry : entries)
        csv << "," << entry.name << "_loss_norm," << entry.name << "_accuracy";
    csv << "\n";
    for (std::size_t e = 0; e < max_epochs; ++e) {
        csv << (e + 1);
        for (const auto& entry : entries) {
            if (e < entry.metrics.rows.size()) {
                char buf[64];
                std::snprintf(buf, sizeof(buf), ",%.9g,%.9g", entry.metrics.rows[e].loss,
                              entry.metrics.rows[e].accuracy);
                csv << buf;
            } else {
                csv << ",,";
            }
        }
        csv << "\n";
    }
    std::printf("curves: %s\n", out.c_str());

    std::printf("%-24s %-20s %s\n", "config", "epochs_to_accuracy", "diverged");
    for (const auto& entry : entries) {
        const auto crossing = lsc::epochs_to_accuracy(entry.metrics, threshold);
        std::printf("%-24s %-20s %d\n", entry.name.c_str(),
                    crossing ? std::to_string(*crossing).c_str() : "not reached",
                    entry.metrics.diverged ? 1 : 0);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Permutation-generated vector systems and LSC training"};
    app.require_subcommand(1);

    std::string label = "21";
    int n = 0;
    std::int64_t classes = 0;
    std::string strategy = "sequential";
    std::uint64_t seed = 0;
    std::string out;
    std::string config_path;
    double threshold = 0.9;
    std::vector<std::string> config_paths;
    TrainOverrides overrides;
    std::string out_metrics, out_checkpoint;

    auto* sysinfo = app.add_subcommand("sysinfo", "Vector system properties");
    sysinfo->add_option("--label", label)->required();
    sysinfo->add_option("--n", n)->required();

    auto* nmin = app.add_subcommand("nmin", "Minimum dimension for a class count");
    nmin->add_option("--label", label)->required();
    nmin->add_option("--classes", classes)->required();

    auto* gen = app.add_subcommand("gen", "Generate an assignment table CSV");
    gen->add_option("--label", label)->required();
    gen->add_option("--n", n)->required();
    gen->add_option("--classes", classes)->required();
    gen->add_option("--strategy", strategy);
    gen->add_option("--seed", seed);
    gen->add_option("--out", out)->required();

    int override_epochs = 0;
    double override_lr = 0.0;
    std::uint64_t override_seed = 0;
    std::string override_loss;
    auto* train = app.add_subcommand("train", "Train against fixed targets");
    train->add_option("--config", config_path)->required();
    auto* opt_epochs = train->add_option("--epochs", override_epochs);
    auto* opt_lr = train->add_option("--lr", override_lr);
    auto* opt_seed = train->add_option("--seed", override_seed);
    auto* opt_loss = train->add_option("--loss", override_loss);
    train->add_option("--out-metrics", out_metrics);
    train->add_option("--out-checkpoint", out_checkpoint);

    auto* compare = app.add_subcommand("compare", "Side-by-side run comparison");
    compare->add_option("--configs", config_paths)->required()->expected(-1);
    compare->add_option("--threshold", threshold);
    compare->add_option("--out", out)->default_val("compare.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sysinfo->parsed()) return cmd_sysinfo(label, n);
        if (nmin->parsed()) return cmd_nmin(label, classes);
        if (gen->parsed()) return cmd_gen(label, n, classes, strategy, seed, out);
        if (train->parsed()) {
            if (opt_epochs->count()) overrides.epochs = override_epochs;
            if (opt_lr->count()) overrides.lr = override_lr;
            if (opt_seed->count()) overrides.seed = override_seed;
            if (opt_loss->count()) overrides.loss = override_loss;
            return cmd_train(config_path, overrides, out_metrics, out_checkpoint);
        }
        if (compare->parsed()) return cmd_compare(config_paths, threshold, out);
    } catch (const lsc::CapacityError& e) {
        std::fprintf(stderr, "capacity error: %s\n", e.what());
        return kExitCapacity;
    } catch (const lsc::DivergenceSignal& e) {
        std::fprintf(stderr, "diverged: %s\n", e.what());
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
