#pragma once

// Desk-scale language model: the previous `context` tokens are embedded,
// concatenated and projected to d_model, then passed through pre-norm
// residual MLP blocks, a final RMSNorm, and a (optionally tied) output head.

#include "xact/activations.hpp"
#include "xact/nn.hpp"
#include "xact/tensor.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace xact {

enum class BlockType { Standard, Gated };

struct ModelConfig {
    std::size_t vocab = 0;
    std::size_t d_model = 64;
    std::size_t context = 8;
    std::size_t n_layers = 4;
    BlockType block = BlockType::Standard;
    ActivationKind activation = ActivationKind::XIelu;
    FixedHyper hyper;
    double alpha_p_init = 0.8;
    double alpha_n_init = 0.8;
    bool tie_embeddings = true;
    double init_std = 0.02;
    std::uint64_t seed = 0;
};

/// Activation name as used in config files: any ActivationKind name, or "swiglu"
/// for a gated block.
struct FfnChoice {
    BlockType block = BlockType::Standard;
    ActivationKind activation = ActivationKind::XIelu;
};
std::optional<FfnChoice> parse_ffn_choice(std::string_view name);
std::string ffn_name(BlockType block, ActivationKind activation);

struct ResidualBlock {
    Tensor norm_gain;
    std::variant<MlpBlock, GatedMlpBlock> ffn;
};

struct ToyLm {
    ModelConfig config;
    Tensor embedding; ///< [vocab x d_model]
    Tensor w_in;      ///< [context * d_model x d_model]
    std::vector<ResidualBlock> blocks;
    Tensor final_gain; ///< [d_model]
    Tensor w_out;      ///< [d_model x vocab]; empty when tied to the embedding
};

/// Seeded Gaussian init: init_std everywhere, down-projections additionally
/// scaled by 1/sqrt(2 n_layers); norm gains start at 1 and activation
/// parameters at the configured alpha inits.
ToyLm make_toylm(const ModelConfig& config);

/// Same structure, every trainable value zero. Used for gradients.
ToyLm zeros_like(const ToyLm& model);

enum class ParamClass { Matrix, Gain, Activation };

struct ParamView {
    std::string name;
    std::span<double> values;
    ParamClass cls = ParamClass::Matrix;
};

/// Every trainable scalar, in a fixed order that matches across models of the
/// same structure.
std::vector<ParamView> parameters(ToyLm& model);
std::size_t parameter_count(const ToyLm& model);

/// Constrained activation parameters of each standard block.
std::vector<ConstrainedParams> layer_alphas(const ToyLm& model);

struct Batch {
    std::size_t rows = 0;
    std::vector<int> contexts; ///< rows x context token ids
    std::vector<int> targets;  ///< rows
};

/// Throws std::out_of_range for token ids outside the vocabulary.
double toylm_fwd(const ToyLm& model, const Batch& batch);

struct ToyLmGrads {
    double loss = 0.0;
    ToyLm grads;
};

ToyLmGrads toylm_bwd(const ToyLm& model, const Batch& batch);

} // namespace xact
