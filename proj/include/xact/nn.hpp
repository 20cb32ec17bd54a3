#pragma once

// Layers with hand-written backward passes. Activations are [rows x features]
// row-major; weights are [in x out] so y = x W.

#include "xact/activations.hpp"
#include "xact/tensor.hpp"

#include <span>

namespace xact {

inline constexpr double kRmsNormEps = 1e-6;
inline constexpr std::size_t kStandardHiddenRatio = 6;
inline constexpr std::size_t kGatedHiddenRatio = 4;

Tensor linear_fwd(const Tensor& x, const Tensor& w);

struct LinearGrads {
    Tensor dx;
    Tensor dw;
};

LinearGrads linear_bwd(const Tensor& x, const Tensor& w, const Tensor& dy);

/// y = x W^T, used by the tied output head.
Tensor linear_fwd_transposed(const Tensor& x, const Tensor& w);
LinearGrads linear_bwd_transposed(const Tensor& x, const Tensor& w, const Tensor& dy);

/// y_i = gain_i * x_i / sqrt(mean(x^2) + eps), row by row.
Tensor rmsnorm_fwd(const Tensor& x, const Tensor& gain);

struct RmsNormGrads {
    Tensor dx;
    Tensor dgain;
};

RmsNormGrads rmsnorm_bwd(const Tensor& x, const Tensor& gain, const Tensor& dy);

/// Elementwise activation over a whole tensor.
Tensor activation_layer_fwd(const Tensor& x, ActivationKind kind, const RawParams& raw, const FixedHyper& hyper);

struct ActivationGrads {
    Tensor dx;
    RawParams d_raw; ///< summed over elements, chained through the constraint
};

ActivationGrads activation_layer_bwd(const Tensor& x, ActivationKind kind, const RawParams& raw,
                                     const FixedHyper& hyper, const Tensor& dy);

/// Standard MLP: y = act(x W_up) W_down with a per-block trainable activation.
struct MlpBlock {
    Tensor w_up;   ///< [d_model x d_hidden]
    Tensor w_down; ///< [d_hidden x d_model]
    ActivationKind act_kind = ActivationKind::XIelu;
    RawParams act_raw;
    FixedHyper hyper;

    std::size_t d_model() const { return w_up.dim(0); }
    std::size_t d_hidden() const { return w_up.dim(1); }
};

/// Zero-weight block with d_hidden = kStandardHiddenRatio * d_model.
MlpBlock make_mlp_block(std::size_t d_model, ActivationKind kind, const RawParams& raw = {},
                        const FixedHyper& hyper = {});

struct MlpCache {
    Tensor pre; ///< x W_up
    Tensor act; ///< act(pre)
};

Tensor mlp_fwd(const MlpBlock& block, const Tensor& x, MlpCache* cache = nullptr);

struct MlpGrads {
    Tensor dx;
    Tensor dw_up;
    Tensor dw_down;
    RawParams d_raw;
};

/// Recomputes the forward pass when no cache is supplied.
MlpGrads mlp_bwd(const MlpBlock& block, const Tensor& x, const Tensor& dy, const MlpCache* cache = nullptr);

/// Gated MLP: y = (SiLU(x W_gate) * (x W_up)) W_down.
struct GatedMlpBlock {
    Tensor w_gate; ///< [d_model x d_hidden]
    Tensor w_up;   ///< [d_model x d_hidden]
    Tensor w_down; ///< [d_hidden x d_model]

    std::size_t d_model() const { return w_up.dim(0); }
    std::size_t d_hidden() const { return w_up.dim(1); }
};

/// Zero-weight block with d_hidden = kGatedHiddenRatio * d_model.
GatedMlpBlock make_gated_block(std::size_t d_model);

struct GatedCache {
    Tensor gate_pre;
    Tensor up;
    Tensor hidden;
};

Tensor swiglu_fwd(const GatedMlpBlock& block, const Tensor& x, GatedCache* cache = nullptr);

struct GatedGrads {
    Tensor dx;
    Tensor dw_gate;
    Tensor dw_up;
    Tensor dw_down;
};

GatedGrads swiglu_bwd(const GatedMlpBlock& block, const Tensor& x, const Tensor& dy, const GatedCache* cache = nullptr);

struct CrossEntropyResult {
    double loss = 0.0; ///< mean over rows
    Tensor dlogits;    ///< gradient of the mean loss
};

/// Softmax cross-entropy with max subtraction. Throws std::out_of_range for a
/// target outside the logit width.
CrossEntropyResult cross_entropy(const Tensor& logits, std::span<const int> targets);

} // namespace xact
