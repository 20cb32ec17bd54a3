#include "xact/adamw.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xact {

StepStats adamw_step(std::span<const ParamView> params, std::span<const ParamView> grads, AdamWState& state,
                     double lr, const AdamWHyper& hyper)
{
    if (params.size() != grads.size()) {
        throw std::invalid_argument("adamw_step: parameter and gradient lists differ in length");
    }
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.values.size(), 0.0);
            state.v.emplace_back(p.values.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw std::invalid_argument("adamw_step: optimizer state does not match parameters");
    }

    double sq = 0.0;
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (grads[k].values.size() != params[k].values.size() || state.m[k].size() != params[k].values.size()) {
            throw std::invalid_argument("adamw_step: shape mismatch for " + params[k].name);
        }
        for (double g : grads[k].values) {
            if (!std::isfinite(g)) {
                throw std::runtime_error("adamw_step: non-finite gradient in " + params[k].name + " at step " +
                                         std::to_string(state.step));
            }
            sq += g * g;
        }
    }
    StepStats stats;
    stats.grad_norm = std::sqrt(sq);
    if (hyper.grad_clip > 0.0 && stats.grad_norm > hyper.grad_clip) {
        stats.clip_scale = hyper.grad_clip / stats.grad_norm;
    }

    ++state.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, double(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double decay = params[k].cls == ParamClass::Matrix ? hyper.weight_decay : 0.0;
        auto values = params[k].values;
        const auto g_in = grads[k].values;
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = g_in[i] * stats.clip_scale;
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            values[i] -= lr * (m_hat / (std::sqrt(v_hat) + hyper.eps) + decay * values[i]);
        }
    }
    return stats;
}

} // namespace xact
