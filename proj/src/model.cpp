#include "xact/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace xact {

namespace {

void fill_normal(Tensor& t, std::mt19937_64& rng, double std_dev)
{
    std::normal_distribution<double> dist(0.0, std_dev);
    for (auto& v : t.data()) {
        v = dist(rng);
    }
}

struct BlockCache {
    Tensor normed;
    MlpCache mlp;
    GatedCache gated;
};

struct ForwardCache {
    Tensor x0;
    std::vector<Tensor> stream; ///< residual stream entering block i; back() is the final stream
    std::vector<BlockCache> blocks;
    Tensor final_normed;
    Tensor logits;
};

void check_batch(const ToyLm& m, const Batch& b)
{
    const auto& c = m.config;
    if (b.contexts.size() != b.rows * c.context || b.targets.size() != b.rows) {
        throw std::invalid_argument("batch shape does not match rows x context");
    }
    auto check = [&](int tok) {
        if (tok < 0 || std::size_t(tok) >= c.vocab) {
            throw std::out_of_range("token id " + std::to_string(tok) + " outside vocabulary of " +
                                    std::to_string(c.vocab));
        }
    };
    for (int t : b.contexts) {
        check(t);
    }
    for (int t : b.targets) {
        check(t);
    }
}

ForwardCache forward(const ToyLm& m, const Batch& b)
{
    check_batch(m, b);
    const auto& c = m.config;
    ForwardCache fc;
    fc.x0 = Tensor({b.rows, c.context * c.d_model});
    for (std::size_t r = 0; r < b.rows; ++r) {
        auto dst = fc.x0.row(r);
        for (std::size_t j = 0; j < c.context; ++j) {
            const auto src = m.embedding.row(std::size_t(b.contexts[r * c.context + j]));
            std::copy(src.begin(), src.end(), dst.begin() + std::ptrdiff_t(j * c.d_model));
        }
    }
    fc.stream.push_back(linear_fwd(fc.x0, m.w_in));
    fc.blocks.resize(m.blocks.size());
    for (std::size_t i = 0; i < m.blocks.size(); ++i) {
        const auto& blk = m.blocks[i];
        auto& bc = fc.blocks[i];
        bc.normed = rmsnorm_fwd(fc.stream.back(), blk.norm_gain);
        Tensor out;
        if (const auto* mlp = std::get_if<MlpBlock>(&blk.ffn)) {
            out = mlp_fwd(*mlp, bc.normed, &bc.mlp);
        } else {
            out = swiglu_fwd(std::get<GatedMlpBlock>(blk.ffn), bc.normed, &bc.gated);
        }
        out += fc.stream.back();
        fc.stream.push_back(std::move(out));
    }
    fc.final_normed = rmsnorm_fwd(fc.stream.back(), m.final_gain);
    fc.logits = c.tie_embeddings ? linear_fwd_transposed(fc.final_normed, m.embedding)
                                 : linear_fwd(fc.final_normed, m.w_out);
    return fc;
}

} // namespace

std::optional<FfnChoice> parse_ffn_choice(std::string_view name)
{
    if (name == "swiglu") {
        return FfnChoice{BlockType::Gated, ActivationKind::Silu};
    }
    if (auto kind = parse_activation_kind(name)) {
        return FfnChoice{BlockType::Standard, *kind};
    }
    return std::nullopt;
}

std::string ffn_name(BlockType block, ActivationKind activation)
{
    return block == BlockType::Gated ? "swiglu" : std::string(to_string(activation));
}

ToyLm make_toylm(const ModelConfig& config)
{
    if (config.vocab == 0 || config.d_model == 0 || config.context == 0) {
        throw std::invalid_argument("model config: vocab, d_model and context must be positive");
    }
    config.hyper.validate();
    ToyLm m;
    m.config = config;
    std::mt19937_64 rng(config.seed);
    const std::size_t d = config.d_model;
    const double down_std = config.init_std / std::sqrt(2.0 * double(std::max<std::size_t>(config.n_layers, 1)));

    m.embedding = Tensor({config.vocab, d});
    fill_normal(m.embedding, rng, config.init_std);
    m.w_in = Tensor({config.context * d, d});
    fill_normal(m.w_in, rng, config.init_std);

    const RawParams raw = unconstrain({config.alpha_p_init, config.alpha_n_init}, config.hyper, config.activation);
    for (std::size_t i = 0; i < config.n_layers; ++i) {
        ResidualBlock blk{Tensor({d}, 1.0), MlpBlock{}};
        if (config.block == BlockType::Gated) {
            auto g = make_gated_block(d);
            fill_normal(g.w_gate, rng, config.init_std);
            fill_normal(g.w_up, rng, config.init_std);
            fill_normal(g.w_down, rng, down_std);
            blk.ffn = std::move(g);
        } else {
            auto s = make_mlp_block(d, config.activation, raw, config.hyper);
            fill_normal(s.w_up, rng, config.init_std);
            fill_normal(s.w_down, rng, down_std);
            blk.ffn = std::move(s);
        }
        m.blocks.push_back(std::move(blk));
    }
    m.final_gain = Tensor({d}, 1.0);
    if (!config.tie_embeddings) {
        m.w_out = Tensor({d, config.vocab});
        fill_normal(m.w_out, rng, config.init_std);
    }
    return m;
}

ToyLm zeros_like(const ToyLm& model)
{
    ToyLm z = model;
    for (auto& p : parameters(z)) {
        std::fill(p.values.begin(), p.values.end(), 0.0);
    }
    return z;
}

std::vector<ParamView> parameters(ToyLm& m)
{
    std::vector<ParamView> out;
    out.push_back({"embedding", m.embedding.data(), ParamClass::Matrix});
    out.push_back({"w_in", m.w_in.data(), ParamClass::Matrix});
    for (std::size_t i = 0; i < m.blocks.size(); ++i) {
        auto& blk = m.blocks[i];
        const std::string prefix = "block" + std::to_string(i) + ".";
        out.push_back({prefix + "norm_gain", blk.norm_gain.data(), ParamClass::Gain});
        if (auto* mlp = std::get_if<MlpBlock>(&blk.ffn)) {
            out.push_back({prefix + "w_up", mlp->w_up.data(), ParamClass::Matrix});
            out.push_back({prefix + "w_down", mlp->w_down.data(), ParamClass::Matrix});
            const auto layout = param_layout(mlp->act_kind);
            if (layout.alpha_p) {
                out.push_back({prefix + "alpha_p_raw", std::span<double>(&mlp->act_raw.alpha_p_raw, 1),
                               ParamClass::Activation});
            }
            if (layout.alpha_n) {
                out.push_back({prefix + "alpha_n_raw", std::span<double>(&mlp->act_raw.alpha_n_raw, 1),
                               ParamClass::Activation});
            }
        } else {
            auto& g = std::get<GatedMlpBlock>(blk.ffn);
            out.push_back({prefix + "w_gate", g.w_gate.data(), ParamClass::Matrix});
            out.push_back({prefix + "w_up", g.w_up.data(), ParamClass::Matrix});
            out.push_back({prefix + "w_down", g.w_down.data(), ParamClass::Matrix});
        }
    }
    out.push_back({"final_gain", m.final_gain.data(), ParamClass::Gain});
    if (!m.config.tie_embeddings) {
        out.push_back({"w_out", m.w_out.data(), ParamClass::Matrix});
    }
    return out;
}

std::size_t parameter_count(const ToyLm& model)
{
    auto copy = model;
    std::size_t n = 0;
    for (const auto& p : parameters(copy)) {
        n += p.values.size();
    }
    return n;
}

std::vector<ConstrainedParams> layer_alphas(const ToyLm& model)
{
    std::vector<ConstrainedParams> out;
    for (const auto& blk : model.blocks) {
        if (const auto* mlp = std::get_if<MlpBlock>(&blk.ffn)) {
            out.push_back(constrain(mlp->act_raw, mlp->hyper, mlp->act_kind));
        }
    }
    return out;
}

double toylm_fwd(const ToyLm& model, const Batch& batch)
{
    const auto fc = forward(model, batch);
    return cross_entropy(fc.logits, batch.targets).loss;
}

ToyLmGrads toylm_bwd(const ToyLm& model, const Batch& batch)
{
    const auto fc = forward(model, batch);
    const auto& c = model.config;
    auto ce = cross_entropy(fc.logits, batch.targets);
    ToyLmGrads out{ce.loss, zeros_like(model)};
    auto& g = out.grads;

    LinearGrads head = c.tie_embeddings ? linear_bwd_transposed(fc.final_normed, model.embedding, ce.dlogits)
                                        : linear_bwd(fc.final_normed, model.w_out, ce.dlogits);
    if (c.tie_embeddings) {
        g.embedding += head.dw;
    } else {
        g.w_out = std::move(head.dw);
    }
    auto fin = rmsnorm_bwd(fc.stream.back(), model.final_gain, head.dx);
    g.final_gain = std::move(fin.dgain);
    Tensor d_stream = std::move(fin.dx);

    for (std::size_t i = model.blocks.size(); i-- > 0;) {
        const auto& blk = model.blocks[i];
        const auto& bc = fc.blocks[i];
        auto& gb = g.blocks[i];
        Tensor d_normed;
        if (const auto* mlp = std::get_if<MlpBlock>(&blk.ffn)) {
            auto mg = mlp_bwd(*mlp, bc.normed, d_stream, &bc.mlp);
            auto& gm = std::get<MlpBlock>(gb.ffn);
            gm.w_up = std::move(mg.dw_up);
            gm.w_down = std::move(mg.dw_down);
            gm.act_raw = mg.d_raw;
            d_normed = std::move(mg.dx);
        } else {
            auto gg = swiglu_bwd(std::get<GatedMlpBlock>(blk.ffn), bc.normed, d_stream, &bc.gated);
            auto& gm = std::get<GatedMlpBlock>(gb.ffn);
            gm.w_gate = std::move(gg.dw_gate);
            gm.w_up = std::move(gg.dw_up);
            gm.w_down = std::move(gg.dw_down);
            d_normed = std::move(gg.dx);
        }
        auto nb = rmsnorm_bwd(fc.stream[i], blk.norm_gain, d_normed);
        gb.norm_gain = std::move(nb.dgain);
        d_stream += nb.dx;
    }

    auto lin = linear_bwd(fc.x0, model.w_in, d_stream);
    g.w_in = std::move(lin.dw);
    for (std::size_t r = 0; r < batch.rows; ++r) {
        const auto src = lin.dx.row(r);
        for (std::size_t j = 0; j < c.context; ++j) {
            auto dst = g.embedding.row(std::size_t(batch.contexts[r * c.context + j]));
            for (std::size_t k = 0; k < c.d_model; ++k) {
                dst[k] += src[j * c.d_model + k];
            }
        }
    }
    return out;
}

} // namespace xact
