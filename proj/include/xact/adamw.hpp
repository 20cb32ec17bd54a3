#pragma once

#include "xact/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace xact {

struct AdamWHyper {
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.1; ///< applied to ParamClass::Matrix only
    double grad_clip = 1.0;    ///< global L2 norm; <= 0 disables clipping
};

struct AdamWState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
};

struct StepStats {
    double grad_norm = 0.0;  ///< before clipping
    double clip_scale = 1.0; ///< factor applied to every gradient
};

/// Global-norm clipping followed by one decoupled AdamW update:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
///   p -= lr (m_hat / (sqrt(v_hat) + eps) + wd p)
/// `grads` must list the same tensors as `params` in the same order. Throws
/// std::runtime_error naming the parameter if a gradient is not finite.
StepStats adamw_step(std::span<const ParamView> params, std::span<const ParamView> grads, AdamWState& state,
                     double lr, const AdamWHyper& hyper);

} // namespace xact
