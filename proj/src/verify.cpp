#include "xact/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace xact {

double central_diff(const std::function<double(double)>& f, double x, double h)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("central_diff: step must be positive");
    }
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double relative_error(double analytic, double numeric)
{
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelErrFloor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

void record(GradCheckReport& r, double err, double x, std::string label = {})
{
    ++r.samples;
    if (err > r.max_rel_err || std::isnan(err)) {
        r.max_rel_err = std::isnan(err) ? INFINITY : err;
        r.worst_x = x;
        r.worst_label = std::move(label);
    }
}

void finish(GradCheckReport& r, double tol)
{
    r.tolerance = tol;
    r.pass = r.max_rel_err < tol;
}

std::vector<double> sample_points(ActivationKind kind, const SamplingPolicy& policy)
{
    std::mt19937_64 rng(policy.seed);
    std::uniform_real_distribution<double> dist(policy.lo, policy.hi);
    std::vector<double> xs;
    xs.reserve(policy.samples + 1);
    const auto bps = breakpoints(kind);
    if (policy.include_breakpoints) {
        xs.insert(xs.end(), bps.begin(), bps.end());
    }
    for (std::size_t i = 0; i < policy.samples; ++i) {
        xs.push_back(dist(rng));
    }
    if (policy.breakpoint_band > 0.0) {
        std::erase_if(xs, [&](double x) {
            return std::any_of(bps.begin(), bps.end(),
                               [&](double b) { return std::abs(x - b) < policy.breakpoint_band; });
        });
    }
    return xs;
}

} // namespace

SamplingPolicy default_policy(ActivationKind kind, std::uint64_t seed)
{
    SamplingPolicy p;
    p.seed = seed;
    if (kind == ActivationKind::Relu) {
        p.breakpoint_band = 1e-4;
    }
    return p;
}

std::vector<ConstrainedParams> draw_params(ActivationKind kind, const FixedHyper& hyper, std::size_t count,
                                           std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<ConstrainedParams> out(count);
    for (auto& p : out) {
        const double u = unit(rng);
        const double v = unit(rng);
        switch (kind) {
        case ActivationKind::XIelu:
            p.alpha_p = 0.05 + 2.95 * u;
            p.alpha_n = hyper.negative_beta() + 0.05 + 2.95 * v;
            break;
        case ActivationKind::XIPRelu:
            p.alpha_p = 0.05 + 2.95 * u;
            p.alpha_n = 0.05 + 2.95 * v;
            break;
        case ActivationKind::XSilu:
            p.alpha_p = -1.0 + 3.0 * u;
            break;
        default:
            break;
        }
    }
    return out;
}

GradCheckReport gradcheck_activation(ActivationKind kind, std::span<const ConstrainedParams> draws,
                                     const FixedHyper& hyper, const SamplingPolicy& policy, double tol)
{
    if (draws.empty()) {
        throw std::invalid_argument("gradcheck_activation: need at least one parameter draw");
    }
    GradCheckReport r;
    r.check = "input_gradient";
    r.subject = std::string(to_string(kind));
    const auto xs = sample_points(kind, policy);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto& p = draws[i % draws.size()];
        const double x = xs[i];
        const double analytic = activation_dx(kind, x, p, hyper);
        const double numeric =
            central_diff([&](double t) { return activation_fwd(kind, t, p, hyper); }, x, policy.h);
        record(r, relative_error(analytic, numeric), x);
    }
    finish(r, tol);
    return r;
}

GradCheckReport gradcheck_params(ActivationKind kind, std::span<const ConstrainedParams> draws,
                                 const FixedHyper& hyper, const SamplingPolicy& policy, double tol)
{
    if (draws.empty()) {
        throw std::invalid_argument("gradcheck_params: need at least one parameter draw");
    }
    GradCheckReport r;
    r.check = "param_gradient";
    r.subject = std::string(to_string(kind));
    const auto layout = param_layout(kind);
    if (!layout.alpha_p && !layout.alpha_n) {
        finish(r, tol);
        return r;
    }
    const auto xs = sample_points(kind, policy);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto& p = draws[i % draws.size()];
        const double x = xs[i];
        const auto analytic = activation_dparams(kind, x, p, hyper);
        if (layout.alpha_p) {
            const double h = policy.h * std::max(1.0, std::abs(p.alpha_p));
            const double numeric = central_diff(
                [&](double a) {
                    auto q = p;
                    q.alpha_p = a;
                    return activation_fwd(kind, x, q, hyper);
                },
                p.alpha_p, h);
            record(r, relative_error(analytic.d_alpha_p, numeric), x, "alpha_p");
        }
        if (layout.alpha_n) {
            const double h = policy.h * std::max(1.0, std::abs(p.alpha_n));
            const double numeric = central_diff(
                [&](double a) {
                    auto q = p;
                    q.alpha_n = a;
                    return activation_fwd(kind, x, q, hyper);
                },
                p.alpha_n, h);
            record(r, relative_error(analytic.d_alpha_n, numeric), x, "alpha_n");
        }
    }
    finish(r, tol);
    return r;
}

std::vector<BreakpointAudit> continuity_audit(ActivationKind kind, std::span<const ConstrainedParams> draws,
                                              const FixedHyper& hyper)
{
    std::vector<BreakpointAudit> out;
    for (double b : breakpoints(kind)) {
        BreakpointAudit a{b, 0.0, 0.0};
        for (const auto& p : draws) {
            const auto left = branch_eval(kind, Side::Left, b, p, hyper);
            const auto right = branch_eval(kind, Side::Right, b, p, hyper);
            const double dv = right.value - left.value;
            const double ds = right.slope - left.slope;
            if (std::abs(dv) > std::abs(a.value_jump)) {
                a.value_jump = dv;
            }
            if (std::abs(ds) > std::abs(a.slope_jump)) {
                a.slope_jump = ds;
            }
        }
        out.push_back(a);
    }
    return out;
}

ToyLm gradcheck_toylm(BlockType block, ActivationKind kind, std::uint64_t seed, std::size_t n_layers)
{
    ModelConfig c;
    c.vocab = 5;
    c.d_model = 4;
    c.context = 2;
    c.n_layers = n_layers;
    c.block = block;
    c.activation = kind;
    c.init_std = 0.5;
    c.seed = seed;
    return make_toylm(c);
}

Batch gradcheck_batch(const ModelConfig& config, std::size_t rows, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> tok(0, int(config.vocab) - 1);
    Batch b;
    b.rows = rows;
    for (std::size_t i = 0; i < rows * config.context; ++i) {
        b.contexts.push_back(tok(rng));
    }
    for (std::size_t i = 0; i < rows; ++i) {
        b.targets.push_back(tok(rng));
    }
    return b;
}

GradCheckReport gradcheck_model(const ToyLm& model, const Batch& batch, double tol, double h)
{
    GradCheckReport r;
    r.check = "model_gradient";
    r.subject = ffn_name(model.config.block, model.config.activation);
    const auto analytic = toylm_bwd(model, batch);
    ToyLm probe = model;
    ToyLm grads = analytic.grads;
    auto probe_params = parameters(probe);
    const auto grad_params = parameters(grads);
    std::size_t flat = 0;
    for (std::size_t k = 0; k < probe_params.size(); ++k) {
        auto values = probe_params[k].values;
        for (std::size_t i = 0; i < values.size(); ++i, ++flat) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = toylm_fwd(probe, batch);
            values[i] = saved - h;
            const double down = toylm_fwd(probe, batch);
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            record(r, relative_error(grad_params[k].values[i], numeric), double(flat),
                   probe_params[k].name + "[" + std::to_string(i) + "]");
        }
    }
    finish(r, tol);
    return r;
}

std::string csv_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string report_csv_header() { return "check,subject,samples,max_rel_err,worst_x,worst_label,tolerance,pass"; }

std::string report_csv_row(const GradCheckReport& r)
{
    return r.check + "," + r.subject + "," + std::to_string(r.samples) + "," + csv_real(r.max_rel_err) + "," +
           csv_real(r.worst_x) + "," + r.worst_label + "," + csv_real(r.tolerance) + "," + (r.pass ? "1" : "0");
}

std::string stability_csv_header() { return "mode,x,naive,stable,reference,naive_rel_err,stable_rel_err"; }

std::string stability_csv_row(const StabilityProbe& p)
{
    return std::string(to_string(p.mode)) + "," + csv_real(p.x) + "," + csv_real(p.naive) + "," +
           csv_real(p.stable) + "," + csv_real(p.reference) + "," + csv_real(p.naive_rel_err) + "," +
           csv_real(p.stable_rel_err);
}

} // namespace xact
