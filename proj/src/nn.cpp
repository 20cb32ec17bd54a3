#include "xact/nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace xact {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.raw(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }
MutMap as_matrix(Tensor& t) { return MutMap(t.raw(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }

void require_rank2(const Tensor& t, const char* what)
{
    if (t.rank() != 2) {
        throw std::invalid_argument(std::string(what) + " must be a matrix");
    }
}

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

std::string shape_str(const Tensor& t)
{
    std::string s = "[";
    for (std::size_t i = 0; i < t.rank(); ++i) {
        s += (i ? "x" : "") + std::to_string(t.dim(i));
    }
    return s + "]";
}

} // namespace

Tensor linear_fwd(const Tensor& x, const Tensor& w)
{
    require_rank2(w, "linear weight");
    require(x.cols() == w.dim(0), "linear_fwd: shape mismatch " + shape_str(x) + " * " + shape_str(w));
    Tensor y({x.rows(), w.dim(1)});
    as_matrix(y).noalias() = as_matrix(x) * as_matrix(w);
    nan_guard(y, "linear_fwd");
    return y;
}

LinearGrads linear_bwd(const Tensor& x, const Tensor& w, const Tensor& dy)
{
    require_rank2(w, "linear weight");
    require(x.cols() == w.dim(0) && dy.cols() == w.dim(1) && dy.rows() == x.rows(),
            "linear_bwd: shape mismatch x" + shape_str(x) + " w" + shape_str(w) + " dy" + shape_str(dy));
    LinearGrads g{Tensor(x.shape()), Tensor(w.shape())};
    as_matrix(g.dx).noalias() = as_matrix(dy) * as_matrix(w).transpose();
    as_matrix(g.dw).noalias() = as_matrix(x).transpose() * as_matrix(dy);
    return g;
}

Tensor linear_fwd_transposed(const Tensor& x, const Tensor& w)
{
    require_rank2(w, "linear weight");
    require(x.cols() == w.dim(1), "linear_fwd_transposed: shape mismatch " + shape_str(x) + " * " + shape_str(w) + "^T");
    Tensor y({x.rows(), w.dim(0)});
    as_matrix(y).noalias() = as_matrix(x) * as_matrix(w).transpose();
    nan_guard(y, "linear_fwd_transposed");
    return y;
}

LinearGrads linear_bwd_transposed(const Tensor& x, const Tensor& w, const Tensor& dy)
{
    require_rank2(w, "linear weight");
    require(x.cols() == w.dim(1) && dy.cols() == w.dim(0) && dy.rows() == x.rows(),
            "linear_bwd_transposed: shape mismatch");
    LinearGrads g{Tensor(x.shape()), Tensor(w.shape())};
    as_matrix(g.dx).noalias() = as_matrix(dy) * as_matrix(w);
    as_matrix(g.dw).noalias() = as_matrix(dy).transpose() * as_matrix(x);
    return g;
}

Tensor rmsnorm_fwd(const Tensor& x, const Tensor& gain)
{
    const std::size_t d = x.cols();
    require(d > 0, "rmsnorm: feature dimension must be positive");
    require(gain.size() == d, "rmsnorm: gain length must match features");
    Tensor y(x.shape());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        auto out = y.row(r);
        double ms = 0.0;
        for (double v : in) {
            ms += v * v;
        }
        const double inv = 1.0 / std::sqrt(ms / double(d) + kRmsNormEps);
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = gain[i] * in[i] * inv;
        }
    }
    nan_guard(y, "rmsnorm_fwd");
    return y;
}

RmsNormGrads rmsnorm_bwd(const Tensor& x, const Tensor& gain, const Tensor& dy)
{
    const std::size_t d = x.cols();
    require(gain.size() == d && dy.same_shape(x), "rmsnorm_bwd: shape mismatch");
    RmsNormGrads g{Tensor(x.shape()), Tensor(gain.shape())};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        const auto up = dy.row(r);
        auto dx = g.dx.row(r);
        double ms = 0.0;
        for (double v : in) {
            ms += v * v;
        }
        const double inv = 1.0 / std::sqrt(ms / double(d) + kRmsNormEps);
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            dot += gain[i] * up[i] * in[i];
            g.dgain[i] += up[i] * in[i] * inv;
        }
        const double coeff = dot * inv * inv * inv / double(d);
        for (std::size_t i = 0; i < d; ++i) {
            dx[i] = gain[i] * up[i] * inv - in[i] * coeff;
        }
    }
    return g;
}

Tensor activation_layer_fwd(const Tensor& x, ActivationKind kind, const RawParams& raw, const FixedHyper& hyper)
{
    const auto p = constrain(raw, hyper, kind);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = activation_fwd(kind, x[i], p, hyper);
    }
    nan_guard(y, "activation_layer_fwd");
    return y;
}

ActivationGrads activation_layer_bwd(const Tensor& x, ActivationKind kind, const RawParams& raw,
                                     const FixedHyper& hyper, const Tensor& dy)
{
    require(dy.same_shape(x), "activation_layer_bwd: shape mismatch");
    const auto p = constrain(raw, hyper, kind);
    ActivationGrads g{Tensor(x.shape()), {}};
    for (std::size_t i = 0; i < x.size(); ++i) {
        g.dx[i] = dy[i] * activation_dx(kind, x[i], p, hyper);
    }
    if (!has_trainable_params(kind)) {
        return g;
    }
    std::vector<double> contrib_p(x.size());
    std::vector<double> contrib_n(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto dp = activation_dparams(kind, x[i], p, hyper);
        contrib_p[i] = dy[i] * dp.d_alpha_p;
        contrib_n[i] = dy[i] * dp.d_alpha_n;
    }
    const auto chain = constraint_derivative(raw, kind);
    g.d_raw.alpha_p_raw = pairwise_sum(contrib_p) * chain.d_alpha_p;
    g.d_raw.alpha_n_raw = pairwise_sum(contrib_n) * chain.d_alpha_n;
    return g;
}

MlpBlock make_mlp_block(std::size_t d_model, ActivationKind kind, const RawParams& raw, const FixedHyper& hyper)
{
    const std::size_t hidden = kStandardHiddenRatio * d_model;
    return MlpBlock{Tensor({d_model, hidden}), Tensor({hidden, d_model}), kind, raw, hyper};
}

Tensor mlp_fwd(const MlpBlock& block, const Tensor& x, MlpCache* cache)
{
    Tensor pre = linear_fwd(x, block.w_up);
    Tensor act = activation_layer_fwd(pre, block.act_kind, block.act_raw, block.hyper);
    Tensor y = linear_fwd(act, block.w_down);
    if (cache) {
        cache->pre = std::move(pre);
        cache->act = std::move(act);
    }
    return y;
}

MlpGrads mlp_bwd(const MlpBlock& block, const Tensor& x, const Tensor& dy, const MlpCache* cache)
{
    MlpCache local;
    if (!cache) {
        mlp_fwd(block, x, &local);
        cache = &local;
    }
    auto down = linear_bwd(cache->act, block.w_down, dy);
    auto act = activation_layer_bwd(cache->pre, block.act_kind, block.act_raw, block.hyper, down.dx);
    auto up = linear_bwd(x, block.w_up, act.dx);
    return MlpGrads{std::move(up.dx), std::move(up.dw), std::move(down.dw), act.d_raw};
}

GatedMlpBlock make_gated_block(std::size_t d_model)
{
    const std::size_t hidden = kGatedHiddenRatio * d_model;
    return GatedMlpBlock{Tensor({d_model, hidden}), Tensor({d_model, hidden}), Tensor({hidden, d_model})};
}

Tensor swiglu_fwd(const GatedMlpBlock& block, const Tensor& x, GatedCache* cache)
{
    Tensor gate_pre = linear_fwd(x, block.w_gate);
    Tensor up = linear_fwd(x, block.w_up);
    Tensor hidden(up.shape());
    const ConstrainedParams none{};
    const FixedHyper hyper{};
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        hidden[i] = baseline_fwd(ActivationKind::Silu, gate_pre[i], none, hyper) * up[i];
    }
    Tensor y = linear_fwd(hidden, block.w_down);
    if (cache) {
        cache->gate_pre = std::move(gate_pre);
        cache->up = std::move(up);
        cache->hidden = std::move(hidden);
    }
    return y;
}

GatedGrads swiglu_bwd(const GatedMlpBlock& block, const Tensor& x, const Tensor& dy, const GatedCache* cache)
{
    GatedCache local;
    if (!cache) {
        swiglu_fwd(block, x, &local);
        cache = &local;
    }
    auto down = linear_bwd(cache->hidden, block.w_down, dy);
    Tensor d_gate_pre(cache->gate_pre.shape());
    Tensor d_up(cache->up.shape());
    const ConstrainedParams none{};
    const FixedHyper hyper{};
    for (std::size_t i = 0; i < d_up.size(); ++i) {
        const double g = cache->gate_pre[i];
        const double gate = baseline_fwd(ActivationKind::Silu, g, none, hyper);
        d_up[i] = down.dx[i] * gate;
        d_gate_pre[i] = down.dx[i] * cache->up[i] * baseline_dx(ActivationKind::Silu, g, none, hyper);
    }
    auto gate = linear_bwd(x, block.w_gate, d_gate_pre);
    auto up = linear_bwd(x, block.w_up, d_up);
    gate.dx += up.dx;
    return GatedGrads{std::move(gate.dx), std::move(gate.dw), std::move(up.dw), std::move(down.dw)};
}

CrossEntropyResult cross_entropy(const Tensor& logits, std::span<const int> targets)
{
    const std::size_t n = logits.rows();
    const std::size_t v = logits.cols();
    require(targets.size() == n, "cross_entropy: one target per row required");
    CrossEntropyResult out{0.0, Tensor(logits.shape())};
    std::vector<double> row_loss(n);
    for (std::size_t r = 0; r < n; ++r) {
        const int t = targets[r];
        if (t < 0 || std::size_t(t) >= v) {
            throw std::out_of_range("cross_entropy: target " + std::to_string(t) + " outside vocabulary of " +
                                    std::to_string(v));
        }
        const auto z = logits.row(r);
        double mx = z[0];
        for (double val : z) {
            mx = std::max(mx, val);
        }
        double denom = 0.0;
        auto grad = out.dlogits.row(r);
        for (std::size_t i = 0; i < v; ++i) {
            grad[i] = std::exp(z[i] - mx);
            denom += grad[i];
        }
        row_loss[r] = std::log(denom) - (z[std::size_t(t)] - mx);
        const double scale = 1.0 / (denom * double(n));
        for (std::size_t i = 0; i < v; ++i) {
            grad[i] *= scale;
        }
        grad[std::size_t(t)] -= 1.0 / double(n);
    }
    out.loss = pairwise_sum(row_loss) / double(n);
    return out;
}

} // namespace xact
