#include "xact/derivation.hpp"

#include "xact/special.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace xact {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(const BasisCoeffs& c)
{
    return std::isfinite(c.c0) && std::isfinite(c.c1) && std::isfinite(c.c2) && std::isfinite(c.ce);
}

std::size_t upper_piece(const std::vector<double>& bps, double x)
{
    return static_cast<std::size_t>(std::lower_bound(bps.begin(), bps.end(), x) - bps.begin());
}

// Term-wise antiderivative with a zero constant.
AntiderivativePiece antiderivative(const BasisCoeffs& c)
{
    return {c.c0, c.c1 / 2.0, c.c2 / 3.0, c.ce, 0.0};
}

// Antiderivative value without the e^x - 1 rewrite; used only to place
// constants so that C absorbs the full e^x term.
double raw_value(const AntiderivativePiece& p, double x)
{
    return p.lin * x + p.quad * x * x + p.cubic * x * x * x + p.expo * std::exp(x);
}

std::string format_real(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(const std::string& token, std::size_t line_no)
{
    if (token == "inf" || token == "+inf") {
        return kInf;
    }
    if (token == "-inf") {
        return -kInf;
    }
    double v = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw std::invalid_argument("gradient spec line " + std::to_string(line_no) + ": bad number '" + token + "'");
    }
    return v;
}

} // namespace

double BasisCoeffs::eval(double x) const
{
    return c0 + c1 * x + c2 * x * x + ce * std::exp(x);
}

void GradientSpec::validate() const
{
    if (pieces.empty()) {
        throw std::invalid_argument("gradient spec has no pieces");
    }
    if (pieces.size() != breakpoints.size() + 1) {
        throw std::invalid_argument("gradient spec needs exactly one more piece than breakpoints");
    }
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        if (!std::isfinite(breakpoints[i])) {
            throw std::invalid_argument("gradient spec breakpoints must be finite");
        }
        if (i > 0 && !(breakpoints[i] > breakpoints[i - 1])) {
            throw std::invalid_argument("gradient spec breakpoints must be strictly increasing");
        }
    }
    for (const auto& p : pieces) {
        if (!finite(p)) {
            throw std::invalid_argument("gradient spec coefficients must be finite");
        }
    }
    if (tracked() && (alpha_slot.size() != pieces.size() || dalpha.size() != pieces.size())) {
        throw std::invalid_argument("gradient spec tracking does not match piece count");
    }
}

std::size_t GradientSpec::piece_index(double x) const { return upper_piece(breakpoints, x); }

double GradientSpec::piece_lower(std::size_t i) const { return i == 0 ? -kInf : breakpoints[i - 1]; }

double GradientSpec::piece_upper(std::size_t i) const { return i < breakpoints.size() ? breakpoints[i] : kInf; }

GradientSpec apply_affine(const GradientSpec& g, const AffineTransform& t)
{
    std::vector<AffineTransform> all(g.pieces.size(), t);
    return apply_affine(g, all);
}

GradientSpec apply_affine(const GradientSpec& g, std::span<const AffineTransform> per_piece)
{
    g.validate();
    if (per_piece.size() != g.pieces.size()) {
        throw std::invalid_argument("apply_affine: need one transform per piece");
    }
    GradientSpec out;
    out.breakpoints = g.breakpoints;
    out.pieces.reserve(g.pieces.size());
    out.alpha_slot.reserve(g.pieces.size());
    out.dalpha.reserve(g.pieces.size());
    for (std::size_t i = 0; i < g.pieces.size(); ++i) {
        const auto& t = per_piece[i];
        const double scale = g.piece_lower(i) >= 0.0 ? t.positive_scale : 1.0;
        BasisCoeffs c = (t.alpha * scale) * g.pieces[i];
        c.c0 += t.beta;
        out.pieces.push_back(c);
        out.alpha_slot.push_back(t.slot);
        out.dalpha.push_back(t.slot ? scale * g.pieces[i] : BasisCoeffs{});
    }
    return out;
}

double AntiderivativePiece::eval(double x) const
{
    return lin * x + quad * x * x + cubic * x * x * x + expo * expm1_stable(x) + (constant + expo);
}

double AntiderivativePiece::derivative(double x) const
{
    return lin + 2.0 * quad * x + 3.0 * cubic * x * x + expo * std::exp(x);
}

std::size_t DerivedActivation::piece_index(double x) const { return upper_piece(breakpoints, x); }

double DerivedActivation::operator()(double x) const { return pieces[piece_index(x)].eval(x); }

double DerivedActivation::derivative(double x) const { return pieces[piece_index(x)].derivative(x); }

DerivedActivation integrate(const GradientSpec& g, double anchor_x, double anchor_value)
{
    g.validate();
    if (!std::isfinite(anchor_x) || !std::isfinite(anchor_value)) {
        throw std::invalid_argument("integrate: anchor must be finite");
    }
    DerivedActivation d;
    d.breakpoints = g.breakpoints;
    d.pieces.reserve(g.pieces.size());
    for (const auto& c : g.pieces) {
        d.pieces.push_back(antiderivative(c));
    }

    const std::size_t k = g.piece_index(anchor_x);
    d.pieces[k].constant = anchor_value - raw_value(d.pieces[k], anchor_x);
    for (std::size_t i = k + 1; i < d.pieces.size(); ++i) {
        const double b = d.breakpoints[i - 1];
        d.pieces[i].constant = d.pieces[i - 1].eval(b) - raw_value(d.pieces[i], b);
    }
    for (std::size_t i = k; i-- > 0;) {
        const double b = d.breakpoints[i];
        d.pieces[i].constant = d.pieces[i + 1].eval(b) - raw_value(d.pieces[i], b);
    }
    return d;
}

double eval(const DerivedActivation& d, double x) { return d(x); }

double eval_gradient(const GradientSpec& g, double x) { return g.pieces[g.piece_index(x)].eval(x); }

std::vector<GradientJump> gradient_discontinuities(const GradientSpec& g)
{
    g.validate();
    std::vector<GradientJump> jumps;
    jumps.reserve(g.breakpoints.size());
    for (std::size_t i = 0; i < g.breakpoints.size(); ++i) {
        const double b = g.breakpoints[i];
        jumps.push_back({b, g.pieces[i + 1].eval(b) - g.pieces[i].eval(b)});
    }
    return jumps;
}

DerivedActivation integrate_dalpha(const GradientSpec& g, int slot, double anchor_x, double anchor_value_dalpha)
{
    g.validate();
    GradientSpec dg;
    dg.breakpoints = g.breakpoints;
    bool found = false;
    for (std::size_t i = 0; i < g.pieces.size(); ++i) {
        if (g.tracked() && g.alpha_slot[i] == slot) {
            dg.pieces.push_back(g.dalpha[i]);
            found = true;
        } else {
            dg.pieces.push_back({});
        }
    }
    if (!found) {
        throw std::invalid_argument("integrate_dalpha: slot " + std::to_string(slot) + " is not tracked by this spec");
    }
    return integrate(dg, anchor_x, anchor_value_dalpha);
}

GradientSpec elu_base()
{
    GradientSpec g;
    g.breakpoints = {0.0};
    g.pieces = {BasisCoeffs{-1.0, 0.0, 0.0, 1.0}, BasisCoeffs{0.0, 1.0, 0.0, 0.0}};
    return g;
}

GradientSpec prelu_base()
{
    GradientSpec g;
    g.breakpoints = {0.0};
    g.pieces = {BasisCoeffs{0.0, 2.0, 0.0, 0.0}, BasisCoeffs{0.0, 1.0, 0.0, 0.0}};
    return g;
}

GradientSpec gradient_spec(const DerivationRecipe& r)
{
    GradientSpec base;
    base.breakpoints = {0.0};
    BasisCoeffs neg;
    switch (r.negative) {
    case NegativeComponent::Exponential: neg = {-1.0, 0.0, 0.0, 1.0}; break;
    case NegativeComponent::Linear: neg = {0.0, 2.0, 0.0, 0.0}; break;
    case NegativeComponent::Zero: break;
    }
    // after the factor 2: 2x integrates to x^2, 3x^2 to x^3
    const BasisCoeffs pos = r.positive == PositiveComponent::Linear ? BasisCoeffs{0.0, 1.0, 0.0, 0.0}
                                                                    : BasisCoeffs{0.0, 0.0, 1.5, 0.0};
    base.pieces = {neg, pos};

    const double beta_n = r.negative == NegativeComponent::Zero ? 0.0 : r.beta_n;
    const AffineTransform transforms[] = {
        {r.alpha_n, beta_n, 2.0, kSlotNegative},
        {r.alpha_p, r.beta_p, 2.0, kSlotPositive},
    };
    return apply_affine(base, transforms);
}

GradientSpec xielu_gradient_spec(double alpha_p, double alpha_n, double beta_p, double beta_n)
{
    return gradient_spec({PositiveComponent::Linear, NegativeComponent::Exponential, alpha_p, alpha_n, beta_p, beta_n});
}

GradientSpec xiprelu_gradient_spec(double alpha_p, double alpha_n, double beta_p, double beta_n)
{
    return gradient_spec({PositiveComponent::Linear, NegativeComponent::Linear, alpha_p, alpha_n, beta_p, beta_n});
}

GradientSpec parse_gradient_spec(std::istream& in)
{
    GradientSpec g;
    std::string line;
    std::size_t line_no = 0;
    double expected_lo = -kInf;
    bool closed = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields(line);
        std::vector<std::string> tokens;
        for (std::string t; fields >> t;) {
            tokens.push_back(t);
        }
        if (tokens.empty()) {
            continue;
        }
        if (tokens.size() != 6) {
            throw std::invalid_argument("gradient spec line " + std::to_string(line_no) +
                                        ": expected `lo hi c0 c1 c2 ce`");
        }
        if (closed) {
            throw std::invalid_argument("gradient spec line " + std::to_string(line_no) + ": piece after +inf");
        }
        const double lo = parse_real(tokens[0], line_no);
        const double hi = parse_real(tokens[1], line_no);
        if (lo != expected_lo) {
            throw std::invalid_argument("gradient spec line " + std::to_string(line_no) +
                                        ": pieces must tile the real line starting at -inf");
        }
        if (!(hi > lo)) {
            throw std::invalid_argument("gradient spec line " + std::to_string(line_no) + ": empty interval");
        }
        g.pieces.push_back({parse_real(tokens[2], line_no), parse_real(tokens[3], line_no),
                            parse_real(tokens[4], line_no), parse_real(tokens[5], line_no)});
        if (std::isinf(hi)) {
            closed = true;
        } else {
            g.breakpoints.push_back(hi);
        }
        expected_lo = hi;
    }
    if (!closed) {
        throw std::invalid_argument("gradient spec must end with a piece reaching +inf");
    }
    g.validate();
    return g;
}

GradientSpec parse_gradient_spec(const std::string& text)
{
    std::istringstream in(text);
    return parse_gradient_spec(in);
}

std::string format_gradient_spec(const GradientSpec& g)
{
    g.validate();
    std::string out = "# lo hi c0 c1 c2 ce\n";
    for (std::size_t i = 0; i < g.pieces.size(); ++i) {
        const auto& c = g.pieces[i];
        out += format_real(g.piece_lower(i)) + ' ' + format_real(g.piece_upper(i)) + ' ' + format_real(c.c0) + ' ' +
               format_real(c.c1) + ' ' + format_real(c.c2) + ' ' + format_real(c.ce) + '\n';
    }
    return out;
}

} // namespace xact
