#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "lsc/training.hpp"

using lsc::LossKind;
using lsc::Matrix;
using lsc::RunMetrics;
using lsc::SyntheticDatasetSpec;
using lsc::TrainConfig;

namespace {

Matrix row_matrix(const std::vector<std::vector<double>>& rows) {
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.at(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
    return m;
}

TrainConfig smoke_config() {
    TrainConfig config;
    config.label = "21";
    config.n = 11;
    config.hidden = {32};
    config.loss = LossKind::cosine;
    config.epochs = 5;
    config.batch_size = 16;
    config.learning_rate = 3e-3;
    config.seed = 1;
    config.dataset = SyntheticDatasetSpec{200, 16, 10, 0.01, 5};
    return config;
}

} // namespace

TEST_CASE("make_blobs") {
    SyntheticDatasetSpec spec{5, 8, 4, 0.0, 3};
    const auto data = lsc::make_blobs(spec);
    CHECK(data.inputs.rows == 20);
    CHECK(data.labels.size() == 20);

    SUBCASE("noise_sigma = 0 makes every sample its class center") {
        for (int c = 0; c < 5; ++c)
            for (int s = 1; s < 4; ++s)
                for (int d = 0; d < 8; ++d)
                    CHECK(data.inputs.at(c * 4 + s, d) == data.inputs.at(c * 4, d));
    }
    SUBCASE("centers are unit vectors") {
        for (int c = 0; c < 5; ++c) {
            double sq = 0.0;
            for (int d = 0; d < 8; ++d) sq += data.inputs.at(c * 4, d) * data.inputs.at(c * 4, d);
            CHECK(std::sqrt(sq) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("fixed seed reproduces the dataset; counts are exact") {
        const auto again = lsc::make_blobs(spec);
        CHECK(again.inputs.data == data.inputs.data);
        std::vector<int> counts(5, 0);
        for (auto label : data.labels) ++counts[static_cast<std::size_t>(label)];
        for (int count : counts) CHECK(count == 4);
    }
    SUBCASE("invalid specs are rejected") {
        CHECK_THROWS_AS(lsc::make_blobs(SyntheticDatasetSpec{0, 8, 4, 0.0, 3}),
                        lsc::ConfigError);
    }
}

TEST_CASE("cosine_loss values") {
    const Matrix t = row_matrix({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(lsc::cosine_loss(row_matrix({{2.0, 0.0}, {0.0, 0.5}}), t).value ==
          doctest::Approx(0.0).epsilon(1e-12)); // e parallel t
    CHECK(lsc::cosine_loss(row_matrix({{0.0, 3.0}, {1.0, 0.0}}), t).value ==
          doctest::Approx(1.0).epsilon(1e-12)); // e perpendicular t
    CHECK(lsc::cosine_loss(row_matrix({{-1.0, 0.0}, {0.0, -2.0}}), t).value ==
          doctest::Approx(2.0).epsilon(1e-12)); // e antiparallel t
    int degenerate = 0;
    lsc::cosine_loss(row_matrix({{0.0, 0.0}}), row_matrix({{1.0, 0.0}}), &degenerate);
    CHECK(degenerate == 1);
}

TEST_CASE("euclidean_loss values") {
    const Matrix t = row_matrix({{1.0, 0.0}});
    CHECK(lsc::euclidean_loss(t, t).value == 0.0);
    CHECK(lsc::euclidean_loss(row_matrix({{0.0, 0.0}}), t).value ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(lsc::euclidean_loss(Matrix(1, 3), t), lsc::ShapeError);
}

TEST_CASE("ce_loss values") {
    SUBCASE("uniform logits give ln K") {
        const Matrix logits(2, 7); // zeros
        CHECK(lsc::ce_loss(logits, {3, 0}).value ==
              doctest::Approx(std::log(7.0)).epsilon(1e-12));
    }
    SUBCASE("loss vanishes as the aligned margin grows") {
        Matrix logits(1, 3);
        logits.at(0, 1) = 40.0;
        CHECK(lsc::ce_loss(logits, {1}).value < 1e-12);
    }
    SUBCASE("out-of-range label is rejected") {
        CHECK_THROWS_AS(lsc::ce_loss(Matrix(1, 3), {3}), lsc::ConfigError);
    }
}

TEST_CASE("loss gradients match central finite differences at B=4, n=14") {
    std::mt19937_64 gen(77);
    auto uniform = [&] {
        return static_cast<double>(gen() >> 11) / 9007199254740992.0 * 2.0 - 1.0;
    };
    Matrix emb(4, 14), targets(4, 14);
    for (double& v : emb.data) v = uniform();
    for (int r = 0; r < 4; ++r) {
        double sq = 0.0;
        for (int c = 0; c < 14; ++c) {
            targets.at(r, c) = uniform();
            sq += targets.at(r, c) * targets.at(r, c);
        }
        for (int c = 0; c < 14; ++c) targets.at(r, c) /= std::sqrt(sq);
    }

    auto check = [&](auto loss_fn) {
        const auto analytic = loss_fn(emb);
        const double h = 1e-6;
        for (std::size_t i = 0; i < emb.data.size(); ++i) {
            Matrix up = emb, down = emb;
            up.data[i] += h;
            down.data[i] -= h;
            const double numeric = (loss_fn(up).value - loss_fn(down).value) / (2.0 * h);
            const double scale =
                std::max({std::fabs(numeric), std::fabs(analytic.grad.data[i]), 1e-10});
            CHECK(std::fabs(numeric - analytic.grad.data[i]) / scale < 1e-6);
        }
    };
    check([&](const Matrix& e) { return lsc::cosine_loss(e, targets); });
    check([&](const Matrix& e) { return lsc::euclidean_loss(e, targets); });
}

TEST_CASE("train: smoke run is deterministic with dense epoch rows") {
    const TrainConfig config = smoke_config();
    const auto a = lsc::train(config);
    const auto b = lsc::train(config);
    REQUIRE(a.metrics.rows.size() == 5);
    for (std::size_t i = 0; i < a.metrics.rows.size(); ++i) {
        CHECK(a.metrics.rows[i].epoch == static_cast<int>(i) + 1);
        CHECK(a.metrics.rows[i].loss == b.metrics.rows[i].loss); // bitwise
        CHECK(a.metrics.rows[i].accuracy == b.metrics.rows[i].accuracy);
    }
    CHECK(a.metrics.config_hash == b.metrics.config_hash);
    CHECK_FALSE(a.metrics.diverged);
    // loss should trend down on easy blobs
    CHECK(a.metrics.rows.back().loss < a.metrics.rows.front().loss);
}

TEST_CASE("train: separable data reaches accuracy 1.0 with cosine LSC") {
    TrainConfig config = smoke_config();
    config.dataset.noise_sigma = 0.0;
    config.dataset.n_classes = 50;
    config.dataset.samples_per_class = 10;
    config.n = 0; // auto n_min
    config.epochs = 40;
    const auto result = lsc::train(config);
    CHECK(lsc::epochs_to_accuracy(result.metrics, 1.0).has_value());
}

TEST_CASE("train: crowded permutohedron targets stall under cosine loss") {
    TrainConfig config = smoke_config();
    config.label = "P";
    config.n = 12; // mcs ~ 0.993
    config.dataset.n_classes = 200;
    config.dataset.samples_per_class = 10;
    config.dataset.noise_sigma = 0.05;
    config.epochs = 10;
    const auto result = lsc::train(config);
    const bool stalled = result.metrics.diverged ||
                         result.metrics.rows.back().accuracy < 0.5;
    CHECK(stalled);
}

TEST_CASE("train: config validation") {
    TrainConfig config = smoke_config();
    config.epochs = 0;
    CHECK_THROWS_AS(lsc::train(config), lsc::ConfigError);
    config = smoke_config();
    config.label = "11";
    config.n = 3; // 6 vectors cannot hold 200 classes
    CHECK_THROWS_AS(lsc::train(config), lsc::CapacityError);
}

TEST_CASE("normalize_curve") {
    RunMetrics metrics;
    for (double loss : {4.0, 2.0, 1.0})
        metrics.rows.push_back({static_cast<int>(metrics.rows.size()) + 1, loss, 0, 0, 0, false});
    lsc::normalize_curve(metrics);
    CHECK(metrics.rows[0].loss == doctest::Approx(1.0));
    CHECK(metrics.rows[1].loss == doctest::Approx(0.5));
    CHECK(metrics.rows[2].loss == doctest::Approx(0.25));

    RunMetrics single;
    single.rows.push_back({1, 7.0, 0, 0, 0, false});
    lsc::normalize_curve(single);
    CHECK(single.rows[0].loss == doctest::Approx(1.0));
    lsc::normalize_curve(single); // idempotent once normalized
    CHECK(single.rows[0].loss == doctest::Approx(1.0));
}

TEST_CASE("epochs_to_accuracy") {
    RunMetrics metrics;
    metrics.rows.push_back({1, 0, 0.3, 0, 0, false});
    metrics.rows.push_back({2, 0, 0.96, 0, 0, false});
    CHECK(lsc::epochs_to_accuracy(metrics, 0.95) == 2);
    CHECK_FALSE(lsc::epochs_to_accuracy(metrics, 0.99).has_value());
    CHECK(lsc::epochs_to_accuracy(metrics, 0.0) == 1);
}

TEST_CASE("metrics CSV roundtrip") {
    RunMetrics metrics;
    metrics.rows.push_back({1, 0.123456789123, 0.5, 1e-3, 42, false});
    metrics.rows.push_back({2, 0.01, 0.75, 1e-3, 41, true});
    metrics.diverged = true;
    const auto path = std::filesystem::temp_directory_path() / "lsc_metrics.csv";
    lsc::save_metrics(metrics, path);
    const auto loaded = lsc::load_metrics(path);
    REQUIRE(loaded.rows.size() == 2);
    CHECK(loaded.rows[0].loss == doctest::Approx(0.123456789).epsilon(1e-9));
    CHECK(loaded.rows[1].diverged);
    CHECK(loaded.diverged);
    std::filesystem::remove(path);
}
