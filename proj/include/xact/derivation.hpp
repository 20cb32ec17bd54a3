#pragma once

// Gradient-first construction of piecewise activations: a gradient is written
// over the basis {1, x, x^2, e^x}, scaled and shifted per piece by trainable
// affine transforms, then integrated term by term with integration constants
// solved so the result is continuous and passes through an anchor point.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xact {

/// g(x) = c0 + c1 x + c2 x^2 + ce e^x
struct BasisCoeffs {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double ce = 0.0;

    double eval(double x) const;

    friend BasisCoeffs operator+(const BasisCoeffs& a, const BasisCoeffs& b)
    {
        return {a.c0 + b.c0, a.c1 + b.c1, a.c2 + b.c2, a.ce + b.ce};
    }
    friend BasisCoeffs operator*(double s, const BasisCoeffs& a) { return {s * a.c0, s * a.c1, s * a.c2, s * a.ce}; }
    friend bool operator==(const BasisCoeffs&, const BasisCoeffs&) = default;
};

/// Piecewise gradient. Piece i covers (b[i-1], b[i]]; a point on a breakpoint
/// belongs to the piece on its left.
///
/// Specs built by apply_affine() remember, per piece, which alpha slot scaled
/// it and the derivative of the coefficients with respect to that alpha.
struct GradientSpec {
    std::vector<double> breakpoints;
    std::vector<BasisCoeffs> pieces;
    std::vector<std::optional<int>> alpha_slot;
    std::vector<BasisCoeffs> dalpha;

    /// Throws std::invalid_argument on unsorted breakpoints, a piece count
    /// that is not breakpoints + 1, or non-finite coefficients.
    void validate() const;

    std::size_t piece_index(double x) const;

    /// Lower bound of piece i's domain (-inf for the first piece).
    double piece_lower(std::size_t i) const;
    double piece_upper(std::size_t i) const;

    bool tracked() const { return !alpha_slot.empty(); }
};

struct AffineTransform {
    double alpha = 1.0;          ///< gradient scale
    double beta = 0.0;           ///< gradient shift
    double positive_scale = 2.0; ///< extra factor on pieces whose domain is x > 0
    std::optional<int> slot;     ///< alpha slot recorded for integrate_dalpha()
};

/// Same transform on every piece.
GradientSpec apply_affine(const GradientSpec& g, const AffineTransform& t);

/// One transform per piece.
GradientSpec apply_affine(const GradientSpec& g, std::span<const AffineTransform> per_piece);

/// Antiderivative piece: x*lin + x^2*quad + x^3*cubic + e^x*expo + constant.
struct AntiderivativePiece {
    double lin = 0.0;
    double quad = 0.0;
    double cubic = 0.0;
    double expo = 0.0;
    double constant = 0.0;

    double eval(double x) const;
    double derivative(double x) const;
};

struct DerivedActivation {
    std::vector<double> breakpoints;
    std::vector<AntiderivativePiece> pieces;

    std::size_t piece_index(double x) const;
    double operator()(double x) const;
    double derivative(double x) const;
};

DerivedActivation integrate(const GradientSpec& g, double anchor_x, double anchor_value);

double eval(const DerivedActivation& d, double x);
double eval_gradient(const GradientSpec& g, double x);

struct GradientJump {
    double at = 0.0;
    double jump = 0.0; ///< right limit minus left limit
};

std::vector<GradientJump> gradient_discontinuities(const GradientSpec& g);

/// d f / d alpha for one tracked slot, as an evaluable piecewise function.
/// The anchor value is taken to be independent of alpha unless
/// anchor_value_dalpha says otherwise. Throws std::invalid_argument when no
/// piece of g carries the slot.
DerivedActivation integrate_dalpha(const GradientSpec& g, int slot, double anchor_x = 0.0,
                                   double anchor_value_dalpha = 0.0);

// Base gradients and the activations the library derives from them.

inline constexpr int kSlotNegative = 0;
inline constexpr int kSlotPositive = 1;

/// ELU with unit saturation, used as a gradient: e^x - 1 for x <= 0, x for x > 0.
GradientSpec elu_base();

/// PReLU-shaped base with both slopes equal; the negative slope carries the
/// same factor 2 the affine transform applies on the positive side.
GradientSpec prelu_base();

enum class PositiveComponent { Linear, Quadratic };
enum class NegativeComponent { Exponential, Linear, Zero };

struct DerivationRecipe {
    PositiveComponent positive = PositiveComponent::Linear;
    NegativeComponent negative = NegativeComponent::Exponential;
    double alpha_p = 0.8;
    double alpha_n = 0.8;
    double beta_p = 0.5;
    double beta_n = 0.5;
};

/// Transformed gradient for a recipe, with both slots tracked. The default
/// recipe is xIELU; NegativeComponent::Linear gives xIPReLU and
/// PositiveComponent::Quadratic the cubic-positive variant. A Zero negative
/// component ignores beta_n and leaves the negative gradient at 0.
GradientSpec gradient_spec(const DerivationRecipe& recipe);

GradientSpec xielu_gradient_spec(double alpha_p, double alpha_n, double beta_p = 0.5, double beta_n = 0.5);
GradientSpec xiprelu_gradient_spec(double alpha_p, double alpha_n, double beta_p = 0.5, double beta_n = 0.5);

// Plain-text spec files, one piece per line: `lo hi c0 c1 c2 ce`.
GradientSpec parse_gradient_spec(std::istream& in);
GradientSpec parse_gradient_spec(const std::string& text);
std::string format_gradient_spec(const GradientSpec& g);

} // namespace xact
