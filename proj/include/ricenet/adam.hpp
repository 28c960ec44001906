#pragma once

#include <cmath>
#include <vector>

#include "ricenet/errors.hpp"
#include "ricenet/model_params.hpp"

namespace ricenet {

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    long step = 0;
};

template <typename T>
AdamState<T> adam_init(const ModelParams<T>& params)
{
    AdamState<T> s;
    for (const auto& t : params.tensors) {
        s.m.emplace_back(t.data.size(), T{});
        s.v.emplace_back(t.data.size(), T{});
    }
    return s;
}

// Bias-corrected Adam on trainable tensors; increments state.step first, so
// the first call uses t = 1. Throws DivergenceError on any non-finite update
// and then leaves params untouched.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state, const AdamHyper& h)
{
    if (grads.size() != params.size() || state.m.size() != params.size()) {
        throw ShapeMismatchError("adam_step: params, grads and state differ in tensor count");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads.tensors[i].data.size() != params.tensors[i].data.size()) {
            throw ShapeMismatchError("adam_step: gradient shape mismatch for " + params.tensors[i].name);
        }
    }
    const long t = state.step + 1;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));

    std::vector<std::vector<T>> next(params.size());
    auto m = state.m;
    auto v = state.v;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params.tensors[i];
        if (!p.trainable) {
            continue;
        }
        const auto& g = grads.tensors[i].data;
        next[i] = p.data;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double gk = g[k];
            const double mk = h.beta1 * m[i][k] + (1.0 - h.beta1) * gk;
            const double vk = h.beta2 * v[i][k] + (1.0 - h.beta2) * gk * gk;
            m[i][k] = static_cast<T>(mk);
            v[i][k] = static_cast<T>(vk);
            const double upd = h.learning_rate * (mk / c1) / (std::sqrt(vk / c2) + h.epsilon);
            const double nv = p.data[k] - upd;
            if (!std::isfinite(nv)) {
                throw DivergenceError("adam_step: non-finite update in " + p.name + " at step " + std::to_string(t));
            }
            next[i][k] = static_cast<T>(nv);
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params.tensors[i].trainable) {
            params.tensors[i].data = std::move(next[i]);
        }
    }
    state.m = std::move(m);
    state.v = std::move(v);
    state.step = t;
}

} // namespace ricenet
