#pragma once

#include "xact/activations.hpp"
#include "xact/model.hpp"
#include "xact/precision.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace xact {

inline constexpr double kInputStep = 1e-6;
inline constexpr double kModelStep = 1e-5;
inline constexpr double kRelErrFloor = 1e-8;

/// (f(x + h) - f(x - h)) / 2h. Throws std::invalid_argument unless h > 0.
double central_diff(const std::function<double(double)>& f, double x, double h);

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double analytic, double numeric);

struct GradCheckReport {
    std::string check;
    std::string subject;
    std::size_t samples = 0;
    double max_rel_err = 0.0;
    double worst_x = 0.0; ///< input value, or flat parameter index for model checks
    std::string worst_label;
    bool pass = true;
    double tolerance = 0.0;
};

/// Where and how densely activation checks sample.
struct SamplingPolicy {
    double lo = -8.0;
    double hi = 8.0;
    std::size_t samples = 1000;
    double h = kInputStep;
    /// Samples closer than this to a breakpoint are skipped.
    double breakpoint_band = 0.0;
    /// Also test exactly at each breakpoint (before band exclusion).
    bool include_breakpoints = false;
    std::uint64_t seed = 0;
};

/// Default policy for a kind: ReLU, whose gradient jumps, gets a 1e-4 band.
SamplingPolicy default_policy(ActivationKind kind, std::uint64_t seed = 0);

/// Random valid constrained parameters: alpha_p in [0.05, 3], alpha_n in
/// (beta_n, beta_n + 3] for xIELU, [0.05, 3] for xIPReLU, xSiLU alpha in [-1, 2].
/// Kinds without parameters get `count` default draws.
std::vector<ConstrainedParams> draw_params(ActivationKind kind, const FixedHyper& hyper, std::size_t count,
                                           std::uint64_t seed);

GradCheckReport gradcheck_activation(ActivationKind kind, std::span<const ConstrainedParams> draws,
                                     const FixedHyper& hyper, const SamplingPolicy& policy, double tol);

/// Finite differences over alpha_p and alpha_n in constrained space.
GradCheckReport gradcheck_params(ActivationKind kind, std::span<const ConstrainedParams> draws,
                                 const FixedHyper& hyper, const SamplingPolicy& policy, double tol);

struct BreakpointAudit {
    double at = 0.0;
    double value_jump = 0.0; ///< right limit minus left limit; largest magnitude over draws
    double slope_jump = 0.0;
};

/// One-sided limits from the branch formulas at each breakpoint of the kind.
std::vector<BreakpointAudit> continuity_audit(ActivationKind kind, std::span<const ConstrainedParams> draws,
                                              const FixedHyper& hyper);

/// One-layer model (vocab 5, d_model 4, context 2) with weights large enough
/// that every gradient is well above the relative-error floor, plus a batch
/// of `rows` random windows.
ToyLm gradcheck_toylm(BlockType block, ActivationKind kind, std::uint64_t seed, std::size_t n_layers = 1);
Batch gradcheck_batch(const ModelConfig& config, std::size_t rows, std::uint64_t seed);

/// Central differences over every trainable scalar of the model.
GradCheckReport gradcheck_model(const ToyLm& model, const Batch& batch, double tol, double h = kModelStep);

std::string report_csv_header();
std::string report_csv_row(const GradCheckReport& r);
std::string stability_csv_header();
std::string stability_csv_row(const StabilityProbe& p);

/// Shortest round-trip-safe form used by every CSV writer: 17 significant digits.
std::string csv_real(double v);

} // namespace xact
