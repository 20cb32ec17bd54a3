#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace xact {

enum class ActivationKind { Elu, Relu2, Silu, GeluTanh, XSilu, XIelu, XIPRelu, Relu };

inline constexpr std::array<ActivationKind, 8> kAllActivationKinds = {
    ActivationKind::Elu,   ActivationKind::Relu2,   ActivationKind::Silu,
    ActivationKind::GeluTanh, ActivationKind::XSilu, ActivationKind::XIelu,
    ActivationKind::XIPRelu, ActivationKind::Relu,
};

std::string_view to_string(ActivationKind kind);
std::optional<ActivationKind> parse_activation_kind(std::string_view name);

/// How the negative branch of xIELU evaluates e^x - 1.
enum class NegativeExpPath {
    Expm1, ///< expm1 on the raw input
    Clamp, ///< expm1(min(x, eps)) in forward and backward alike
};

struct FixedHyper {
    double beta = 0.5;           ///< gradient value at the origin
    std::optional<double> beta_n; ///< negative-branch intercept when it differs from beta
    double eps = -1e-6;          ///< upper bound used by NegativeExpPath::Clamp
    double elu_alpha = 1.0;
    NegativeExpPath exp_path = NegativeExpPath::Expm1;

    double positive_beta() const { return beta; }
    double negative_beta() const { return beta_n.value_or(beta); }

    /// Throws std::invalid_argument when beta is not finite, eps >= 0 or elu_alpha <= 0.
    void validate() const;
};

/// Unconstrained trainables as stored by the optimizer.
struct RawParams {
    double alpha_p_raw = 0.0;
    double alpha_n_raw = 0.0;
};

/// Parameters in the space the activation formulas use. xSiLU keeps its
/// single alpha in alpha_p.
struct ConstrainedParams {
    double alpha_p = 0.0;
    double alpha_n = 0.0;
};

struct ParamGrad {
    double d_alpha_p = 0.0;
    double d_alpha_n = 0.0;
};

struct OpCount {
    std::uint32_t exps = 0;
    std::uint32_t mults = 0;
    std::uint32_t adds = 0;
    std::uint32_t divs = 0;
    std::uint32_t conditionals = 0;

    friend bool operator==(const OpCount&, const OpCount&) = default;
};

/// Per-kind mapping from raw to constrained parameters.
enum class ConstraintPolicy {
    None,            ///< kind has no trainable parameters
    Identity,        ///< alpha = raw (xSiLU)
    Softplus,        ///< alpha_p = sp(raw_p), alpha_n = sp(raw_n) (xIPReLU)
    ShiftedSoftplus, ///< alpha_p = sp(raw_p), alpha_n = beta_n + sp(raw_n) (xIELU)
};

ConstraintPolicy constraint_policy(ActivationKind kind);

struct ParamLayout {
    bool alpha_p = false;
    bool alpha_n = false;
};

ParamLayout param_layout(ActivationKind kind);
bool has_trainable_params(ActivationKind kind);

ConstrainedParams constrain(const RawParams& raw, const FixedHyper& hyper, ActivationKind kind);

/// Inverse of constrain() for initialization. Throws std::domain_error when
/// the requested value violates the kind's constraint.
RawParams unconstrain(const ConstrainedParams& params, const FixedHyper& hyper, ActivationKind kind);

/// Diagonal of d(constrained)/d(raw): sigmoid(raw) for softplus slots, 1 for
/// identity slots, 0 for unused slots.
ParamGrad constraint_derivative(const RawParams& raw, ActivationKind kind);

// xIELU: alpha_p x^2 + beta x for x > 0, alpha_n (e^x - 1) - alpha_n x + beta x otherwise.
double xielu_fwd(double x, const ConstrainedParams& p, const FixedHyper& h);
double xielu_dx(double x, const ConstrainedParams& p, const FixedHyper& h);
ParamGrad xielu_dparams(double x, const ConstrainedParams& p, const FixedHyper& h);

// xIPReLU: alpha x^2 + beta x with alpha chosen by the sign of x.
double xiprelu_fwd(double x, const ConstrainedParams& p, const FixedHyper& h);
double xiprelu_dx(double x, const ConstrainedParams& p, const FixedHyper& h);
ParamGrad xiprelu_dparams(double x, const ConstrainedParams& p, const FixedHyper& h);

/// Closed forms of the remaining kinds (ELU, ReLU², SiLU, tanh-GELU, xSiLU, ReLU).
/// Also accepts XIelu and XIPRelu and forwards to their kernels.
double baseline_fwd(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h);
double baseline_dx(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h);

/// Uniform entry points used by layers and checkers.
double activation_fwd(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h);
double activation_dx(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h);
ParamGrad activation_dparams(ActivationKind kind, double x, const ConstrainedParams& p, const FixedHyper& h);

enum class Side { Left, Right };

/// Value and slope of one branch formula of a piecewise kind, evaluated at x
/// regardless of which side x falls on.
struct BranchSample {
    double value = 0.0;
    double slope = 0.0;
};

BranchSample branch_eval(ActivationKind kind, Side side, double x, const ConstrainedParams& p, const FixedHyper& h);

/// Breakpoints of a kind's piecewise definition; empty for smooth kinds.
std::span<const double> breakpoints(ActivationKind kind);

/// Static per-element operation census of the inference path.
OpCount op_count(ActivationKind kind);

} // namespace xact
