#include "xact/activations.hpp"

#include "xact/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace xact {

namespace {

constexpr double kGeluCoeff = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
constexpr std::array<double, 1> kOriginBreakpoint = {0.0};

// e^x - 1 for the xIELU negative branch under the configured path.
double negative_em1(double x, const FixedHyper& h)
{
    if (h.exp_path == NegativeExpPath::Clamp) {
        return expm1_stable(std::min(x, h.eps));
    }
    return expm1_stable(x);
}

double gelu_tanh_fwd(double x)
{
    // 0.5 (1 + tanh u) written as sigmoid(2u); 1 + tanh u cancels for u << 0
    const double u = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
    return x * sigmoid(2.0 * u);
}

double gelu_tanh_dx(double x)
{
    const double u = kSqrt2OverPi * (x + kGeluCoeff * x * x * x);
    const double s = sigmoid(2.0 * u);
    const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * x * x);
    return s + 2.0 * x * s * (1.0 - s) * du;
}

double xsilu_fwd(double x, double alpha)
{
    return x * (sigmoid(x) * (1.0 + 2.0 * alpha) - alpha);
}

double xsilu_dx(double x, double alpha)
{
    const double s = sigmoid(x);
    const double gain = 1.0 + 2.0 * alpha;
    return (s * gain - alpha) + x * s * (1.0 - s) * gain;
}

} // namespace

std::string_view to_string(ActivationKind kind)
{
    switch (kind) {
    case ActivationKind::Elu: return "elu";
    case ActivationKind::Relu2: return "relu2";
    case ActivationKind::Silu: return "silu";
    case ActivationKind::GeluTanh: return "gelu_tanh";
    case ActivationKind::XSilu: return "xsilu";
    case ActivationKind::XIelu: return "xielu";
    case ActivationKind::XIPRelu: return "xiprelu";
    case ActivationKind::Relu: return "relu";
    }
    return "unknown";
}

std::optional<ActivationKind> parse_activation_kind(std::string_view name)
{
    for (auto kind : kAllActivationKinds) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    if (name == "gelu") {
        return ActivationKind::GeluTanh;
    }
    return std::nullopt;
}

void FixedHyper::validate() const
{
    if (!std::isfinite(beta) || (beta_n && !std::isfinite(*beta_n))) {
        throw std::invalid_argument("FixedHyper: beta must be finite");
    }
    if (!(eps < 0.0)) {
        throw std::invalid_argument("FixedHyper: eps must be negative");
    }
    if (!(elu_alpha > 0.0)) {
        throw std::invalid_argument("FixedHyper: elu_alpha must be positive");
    }
}

ConstraintPolicy constraint_policy(ActivationKind kind)
{
    switch (kind) {
    case ActivationKind::XIelu: return ConstraintPolicy::ShiftedSoftplus;
    case ActivationKind::XIPRelu: return ConstraintPolicy::Softplus;
    case ActivationKind::XSilu: return ConstraintPolicy::Identity;
    default: return ConstraintPolicy::None;
    }
}

ParamLayout param_layout(ActivationKind kind)
{
    switch (kind) {
    case ActivationKind::XIelu:
    case ActivationKind::XIPRelu: return {true, true};
    case ActivationKind::XSilu: return {true, false};
    default: return {};
    }
}

bool has_trainable_params(ActivationKind kind)
{
    const auto layout = param_layout(kind);
    return layout.alpha_p || layout.alpha_n;
}

ConstrainedParams constrain(const RawParams& raw, const FixedHyper& hyper, ActivationKind kind)
{
    // Floors keep the inequalities strict once softplus underflows or is
    // absorbed by the shift.
    constexpr double kTiny = std::numeric_limits<double>::min();
    switch (constraint_policy(kind)) {
    case ConstraintPolicy::None:
        return {};
    case ConstraintPolicy::Identity:
        return {raw.alpha_p_raw, 0.0};
    case ConstraintPolicy::Softplus:
        return {std::max(softplus(raw.alpha_p_raw), kTiny), std::max(softplus(raw.alpha_n_raw), kTiny)};
    case ConstraintPolicy::ShiftedSoftplus: {
        const double beta_n = hyper.negative_beta();
        const double floor_n = std::nextafter(beta_n, std::numeric_limits<double>::infinity());
        return {std::max(softplus(raw.alpha_p_raw), kTiny), std::max(beta_n + softplus(raw.alpha_n_raw), floor_n)};
    }
    }
    return {};
}

RawParams unconstrain(const ConstrainedParams& params, const FixedHyper& hyper, ActivationKind kind)
{
    switch (constraint_policy(kind)) {
    case ConstraintPolicy::None:
        return {};
    case ConstraintPolicy::Identity:
        return {params.alpha_p, 0.0};
    case ConstraintPolicy::Softplus:
        return {inverse_softplus(params.alpha_p), inverse_softplus(params.alpha_n)};
    case ConstraintPolicy::ShiftedSoftplus:
        return {inverse_softplus(params.alpha_p), inverse_softplus(params.alpha_n - hyper.negative_beta())};
    }
    return {};
}

ParamGrad constraint_derivative(const RawParams& raw, ActivationKind kind)
{
    switch (constraint_policy(kind)) {
    case ConstraintPolicy::None:
        return {};
    case ConstraintPolicy::Identity:
        return {1.0, 0.0};
    case ConstraintPolicy::Softplus:
    case ConstraintPolicy::ShiftedSoftplus:
        return {sigmoid(raw.alpha_p_raw), sigmoid(raw.alpha_n_raw)};
    }
    return {};
}

double xielu_fwd(double x, const ConstrainedParams& p, const FixedHyper& h)
{
    if (x > 0.0) {
        return p.alpha_p * x * x + h.positive_beta() * x;
    }
    return p.alpha_n * negative_em1(x, h) - p.alpha_n * x + h.negative_beta() * x;
}

double xielu_dx(double x, const ConstrainedParams& p, const FixedHyper& h)
{
    if (x > 0.0) {
        return 2.0 * p.alpha_p * x + h.positive_beta();
    }
    return p.alpha_n * negative_em1(x, h) + h.negative_beta();
}

ParamGrad xielu_dparams(double x, const ConstrainedParams&, const FixedHyper& h)
{
    if (x > 0.0) {
        return {x * x, 0.0};
    }
    return {0.0, negative_em1(x, h) - x};
}

double xiprelu_fwd(double x, const ConstrainedParams& p, const FixedHyper& h)
{
    if (x > 0.0) {
        return p.alpha_p * x * x + h.positive_beta() * x;
    }
    return p.alpha_n * x * x + h.negative_beta() * x;
}

double xiprelu_dx(double x, const ConstrainedParams& p, const FixedHyper& h)
{
    if (x > 0.0) {
        return 2.0 * p.alpha_p * x + h.positive_beta();
    }
    return 2.0 * p.alpha_n * x + h.negative_beta();
}

ParamGrad xiprelu_dparams(double x, const ConstrainedParams&, const FixedHyper&)
{
    if (x > 0.0) {
        return {x * x, 0.0};
    }
    return {0.0, x * x};
}

double baseline_fwd(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h)
{
    switch (kind) {
    case ActivationKind::Elu: return x > 0.0 ? x : h.elu_alpha * expm1_stable(x);
    case ActivationKind::Relu2: return x > 0.0 ? x * x : 0.0;
    case ActivationKind::Silu: return x * sigmoid(x);
    case ActivationKind::GeluTanh: return gelu_tanh_fwd(x);
    case ActivationKind::XSilu: return xsilu_fwd(x, p.alpha_p);
    case ActivationKind::XIelu: return xielu_fwd(x, p, h);
    case ActivationKind::XIPRelu: return xiprelu_fwd(x, p, h);
    case ActivationKind::Relu: return x > 0.0 ? x : 0.0;
    }
    return 0.0;
}

double baseline_dx(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h)
{
    switch (kind) {
    case ActivationKind::Elu: return x > 0.0 ? 1.0 : h.elu_alpha * std::exp(x);
    case ActivationKind::Relu2: return x > 0.0 ? 2.0 * x : 0.0;
    case ActivationKind::Silu: {
        const double s = sigmoid(x);
        return s + x * s * (1.0 - s);
    }
    case ActivationKind::GeluTanh: return gelu_tanh_dx(x);
    case ActivationKind::XSilu: return xsilu_dx(x, p.alpha_p);
    case ActivationKind::XIelu: return xielu_dx(x, p, h);
    case ActivationKind::XIPRelu: return xiprelu_dx(x, p, h);
    case ActivationKind::Relu: return x > 0.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

double activation_fwd(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h)
{
    return baseline_fwd(kind, x, p, h);
}

double activation_dx(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h)
{
    return baseline_dx(kind, x, p, h);
}

ParamGrad activation_dparams(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h)
{
    switch (kind) {
    case ActivationKind::XIelu: return xielu_dparams(x, p, h);
    case ActivationKind::XIPRelu: return xiprelu_dparams(x, p, h);
    case ActivationKind::XSilu: return {x * (2.0 * sigmoid(x) - 1.0), 0.0};
    default: return {};
    }
}

BranchSample branch_eval(ActivationKind kind, Side side, double x, const ConstrainedParams& p, const FixedHyper& h)
{
    const bool right = side == Side::Right;
    switch (kind) {
    case ActivationKind::XIelu:
        if (right) {
            return {p.alpha_p * x * x + h.positive_beta() * x, 2.0 * p.alpha_p * x + h.positive_beta()};
        }
        return {p.alpha_n * negative_em1(x, h) - p.alpha_n * x + h.negative_beta() * x,
                p.alpha_n * negative_em1(x, h) + h.negative_beta()};
    case ActivationKind::XIPRelu:
        if (right) {
            return {p.alpha_p * x * x + h.positive_beta() * x, 2.0 * p.alpha_p * x + h.positive_beta()};
        }
        return {p.alpha_n * x * x + h.negative_beta() * x, 2.0 * p.alpha_n * x + h.negative_beta()};
    case ActivationKind::Elu:
        if (right) {
            return {x, 1.0};
        }
        return {h.elu_alpha * expm1_stable(x), h.elu_alpha * std::exp(x)};
    case ActivationKind::Relu2:
        return right ? BranchSample{x * x, 2.0 * x} : BranchSample{0.0, 0.0};
    case ActivationKind::Relu:
        return right ? BranchSample{x, 1.0} : BranchSample{0.0, 0.0};
    default:
        // smooth kinds have a single formula
        return {baseline_fwd(kind, x, p, h), baseline_dx(kind, x, p, h)};
    }
}

std::span<const double> breakpoints(ActivationKind kind)
{
    switch (kind) {
    case ActivationKind::Elu:
    case ActivationKind::Relu2:
    case ActivationKind::XIelu:
    case ActivationKind::XIPRelu:
    case ActivationKind::Relu:
        return kOriginBreakpoint;
    default:
        return {};
    }
}

OpCount op_count(ActivationKind kind)
{
    // Counted per element on the inference path (constraints folded into
    // constants). Negation counts as a multiplication and e^x - 1 as one
    // exponentiation plus one addition.
    switch (kind) {
    // x*(ap*x + b) | an*((e^x - 1) - x) + b*x, selected on x > 0
    case ActivationKind::XIelu: return {1, 4, 4, 0, 1};
    // 0.5*x*(1 + tanh(c*(x + k*x*x*x))) with tanh as (e^u - e^-u)/(e^u + e^-u)
    case ActivationKind::GeluTanh: return {2, 6, 4, 1, 0};
    // x * 1/(1 + e^(-x))
    case ActivationKind::Silu: return {1, 2, 1, 1, 0};
    // x*x selected on x > 0
    case ActivationKind::Relu2: return {0, 1, 0, 0, 1};
    // ReLU² plus three multiplications and one addition
    case ActivationKind::XIPRelu: return {0, 4, 1, 0, 1};
    // x selected on x > 0 | a*(e^x - 1)
    case ActivationKind::Elu: return {1, 1, 1, 0, 1};
    // x*((1 + 2a)*sigmoid(x) - a) with 1 + 2a folded
    case ActivationKind::XSilu: return {1, 3, 2, 1, 0};
    case ActivationKind::Relu: return {0, 0, 0, 0, 1};
    }
    return {};
}

} // namespace xact
