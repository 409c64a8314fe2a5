#pragma once

// Test-only oracles, kept independent of the library's rank/unrank and
// enumeration paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "lsc/combinatorics.hpp"
#include "lsc/nn_core.hpp"
#include "lsc/training.hpp"

namespace oracles {

/// All unique permutations of the multiset in ascending lexicographic
/// order, generated by recursive descent over available values (never via
/// the library's unrank/next_permutation).
inline void enumerate_rec(std::map<std::int64_t, int>& avail, lsc::Coords& prefix,
                          std::size_t length, std::vector<lsc::Coords>& out) {
    if (prefix.size() == length) {
        out.push_back(prefix);
        return;
    }
    for (auto& [value, mult] : avail) {
        if (mult == 0) continue;
        --mult;
        prefix.push_back(value);
        enumerate_rec(avail, prefix, length, out);
        prefix.pop_back();
        ++mult;
    }
}

inline std::vector<lsc::Coords> enumerate_all(const lsc::MultisetSpec& spec) {
    std::map<std::int64_t, int> avail;
    for (const auto& e : spec.entries()) avail[e.value] = e.multiplicity;
    std::vector<lsc::Coords> out;
    lsc::Coords prefix;
    enumerate_rec(avail, prefix, static_cast<std::size_t>(spec.length()), out);
    return out;
}

/// Multinomial count via repeated exact factorial division.
inline lsc::BigCount count_by_factorials(const lsc::MultisetSpec& spec) {
    auto factorial = [](int k) {
        lsc::BigCount f = 1;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    };
    lsc::BigCount numerator = factorial(spec.length());
    for (const auto& e : spec.entries()) numerator /= factorial(e.multiplicity);
    return numerator;
}

/// Sign pattern of the relu preactivations; differentiating the loss is
/// only valid while this pattern is fixed.
inline std::vector<bool> relu_pattern(const lsc::MLPModel& model,
                                      const lsc::ForwardCache& cache) {
    std::vector<bool> pattern;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        if (model.layers[l].activation != lsc::Activation::relu) continue;
        for (double v : cache.preacts[l].data) pattern.push_back(v > 0.0);
    }
    return pattern;
}

/// Max relative error between analytic parameter gradients and central
/// finite differences of the given scalar loss. The step is small (1e-6)
/// because the cosine loss's higher derivatives blow up as 1/|e|^3 when an
/// embedding row is short, which dominates truncation error. Parameters
/// whose perturbation flips a relu sign are skipped: the loss is not
/// differentiable across the kink, so the comparison is meaningless there.
inline double max_gradient_rel_error(
    lsc::MLPModel& model, const lsc::Matrix& inputs,
    const std::function<lsc::LossResult(const lsc::ForwardCache&)>& loss_fn,
    bool with_head) {
    const lsc::ForwardCache cache = lsc::forward(model, inputs, with_head);
    const lsc::LossResult loss = loss_fn(cache);
    const lsc::Gradients grads = lsc::backward(model, cache, loss.grad);

    std::vector<double> analytic;
    std::vector<double*> params;
    auto push = [&](lsc::DenseLayer& layer, const lsc::Matrix& dw,
                    const std::vector<double>& db) {
        for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
            params.push_back(&layer.weights.data[i]);
            analytic.push_back(dw.data[i]);
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            params.push_back(&layer.bias[i]);
            analytic.push_back(db[i]);
        }
    };
    for (std::size_t l = 0; l < model.layers.size(); ++l)
        push(model.layers[l], grads.d_weights[l], grads.d_bias[l]);
    if (model.head && grads.d_head_weights)
        push(*model.head, *grads.d_head_weights, *grads.d_head_bias);

    const std::vector<bool> base_pattern = relu_pattern(model, cache);
    const double h = 1e-6;
    double max_rel_err = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double original = *params[i];
        *params[i] = original + h;
        const lsc::ForwardCache up_cache = lsc::forward(model, inputs, with_head);
        const double up = loss_fn(up_cache).value;
        *params[i] = original - h;
        const lsc::ForwardCache down_cache = lsc::forward(model, inputs, with_head);
        const double down = loss_fn(down_cache).value;
        *params[i] = original;
        if (relu_pattern(model, up_cache) != base_pattern ||
            relu_pattern(model, down_cache) != base_pattern)
            continue;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-8});
        max_rel_err = std::max(max_rel_err, std::fabs(numeric - analytic[i]) / scale);
    }
    return max_rel_err;
}

} // namespace oracles
