#include "xact/activations.hpp"
#include "xact/special.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

using namespace xact;

namespace {

// Reference values evaluated with mpmath at 40 digits.
constexpr double kInvSp08 = 0.20338232081102454926;
constexpr double kInvSp03 = -1.0502256128148466795;
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kXieluMinus1 = -0.20569644706284614272;
constexpr double kXieluDxMinus20 = -0.29999999835107710205;
constexpr double kEluMinus1 = -0.6321205588285576784;
constexpr double kExpMinus1 = 0.3678794411714423216;
constexpr double kXsilu1 = 0.9621171572600097585;
constexpr double kXsiluDx1 = 1.3553410237429734636;
constexpr double kEMinus1 = 1.7182818284590452354;

const double kExpm1Saturation = std::log(std::numeric_limits<double>::epsilon() / 2);

const ConstrainedParams kInit{0.8, 0.8};
const FixedHyper kHyper{};

} // namespace

TEST(Special, SoftplusValues)
{
    EXPECT_NEAR(softplus(0.0), kLn2, 1e-15);
    EXPECT_NEAR(softplus(100.0), 100.0, 1e-12 * 100.0);
    EXPECT_NEAR(softplus(kInvSp08), 0.8, 1e-15);
    EXPECT_NEAR(softplus(-40.0), std::exp(-40.0), 1e-30);
    EXPECT_GT(softplus(-700.0), 0.0);
}

TEST(Special, SoftplusIsContinuousAtThresholds)
{
    for (double t : {kOverflowThreshold, -kOverflowThreshold}) {
        const double lo = std::nextafter(t, -INFINITY);
        const double hi = std::nextafter(t, INFINITY);
        EXPECT_NEAR(softplus(lo), softplus(hi), 1e-13 * std::max(1.0, std::abs(softplus(hi))));
    }
}

TEST(Special, InverseSoftplus)
{
    EXPECT_NEAR(inverse_softplus(kLn2), 0.0, 1e-15);
    EXPECT_NEAR(inverse_softplus(0.8), kInvSp08, 1e-15);
    EXPECT_NEAR(inverse_softplus(0.3), kInvSp03, 1e-14);
    EXPECT_THROW(inverse_softplus(0.0), std::domain_error);
    EXPECT_THROW(inverse_softplus(-1.0), std::domain_error);
}

TEST(Special, InverseSoftplusRoundTrip)
{
    for (double y : {1e-12, 1e-6, 0.01, 0.3, 0.8, 1.0, 5.0, 29.0, 31.0, 200.0}) {
        EXPECT_NEAR(softplus(inverse_softplus(y)), y, 1e-12 * y) << y;
    }
}

TEST(Special, Sigmoid)
{
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(1.0) + sigmoid(-1.0), 1.0, 1e-16);
    EXPECT_GT(sigmoid(-800.0), -1e-300);
    EXPECT_LE(sigmoid(800.0), 1.0);
    // derivative of softplus
    for (double x : {-3.0, -0.5, 0.0, 2.0}) {
        const double h = 1e-6;
        EXPECT_NEAR((softplus(x + h) - softplus(x - h)) / (2 * h), sigmoid(x), 1e-9);
    }
}

TEST(Special, Expm1Stable)
{
    EXPECT_EQ(expm1_stable(0.0), 0.0);
    EXPECT_NEAR(expm1_stable(-1e-12), -9.999999999995e-13, 1e-27);
    EXPECT_NEAR(expm1_stable(1.0), kEMinus1, 1e-15);
}

TEST(Special, Expm1SignAndBound)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> exponent(-300.0, 2.5);
    for (int i = 0; i < 2000; ++i) {
        const double mag = std::pow(10.0, exponent(rng));
        for (double x : {mag, -mag}) {
            const double y = expm1_stable(x);
            EXPECT_EQ(std::signbit(y), std::signbit(x)) << x;
            // below about -37.4, e^x is under half an ulp of 1 and the result rounds to -1
            if (x > kExpm1Saturation) {
                EXPECT_GT(y, -1.0) << x;
            } else {
                EXPECT_GE(y, -1.0) << x;
            }
        }
    }
    EXPECT_GE(expm1_stable(-800.0), -1.0);
}

TEST(Kinds, NamesRoundTrip)
{
    for (auto k : kAllActivationKinds) {
        EXPECT_EQ(parse_activation_kind(to_string(k)), k);
    }
    EXPECT_EQ(parse_activation_kind("gelu"), ActivationKind::GeluTanh);
    EXPECT_FALSE(parse_activation_kind("swish"));
}

TEST(Hyper, Validate)
{
    EXPECT_NO_THROW(FixedHyper{}.validate());
    FixedHyper h;
    h.eps = 0.0;
    EXPECT_THROW(h.validate(), std::invalid_argument);
    h = {};
    h.elu_alpha = 0.0;
    EXPECT_THROW(h.validate(), std::invalid_argument);
    h = {};
    h.beta = NAN;
    EXPECT_THROW(h.validate(), std::invalid_argument);
}

TEST(Constraint, InitRoundTrip)
{
    const RawParams raw{inverse_softplus(0.8), inverse_softplus(0.3)};
    const auto p = constrain(raw, kHyper, ActivationKind::XIelu);
    EXPECT_NEAR(p.alpha_p, 0.8, 1e-12);
    EXPECT_NEAR(p.alpha_n, 0.8, 1e-12);
    const auto back = unconstrain(p, kHyper, ActivationKind::XIelu);
    EXPECT_NEAR(back.alpha_p_raw, raw.alpha_p_raw, 1e-12);
    EXPECT_NEAR(back.alpha_n_raw, raw.alpha_n_raw, 1e-12);
}

TEST(Constraint, ZeroRaw)
{
    const auto p = constrain({0.0, 0.0}, kHyper, ActivationKind::XIelu);
    EXPECT_NEAR(p.alpha_p, kLn2, 1e-15);
    EXPECT_NEAR(p.alpha_n, 0.5 + kLn2, 1e-15);
    const auto q = constrain({0.0, 0.0}, kHyper, ActivationKind::XIPRelu);
    EXPECT_NEAR(q.alpha_n, kLn2, 1e-15);
}

TEST(Constraint, DeepNegativeStaysStrict)
{
    const auto p = constrain({-40.0, -40.0}, kHyper, ActivationKind::XIelu);
    EXPECT_NEAR(p.alpha_p, 0.0, 1e-15);
    EXPECT_NEAR(p.alpha_n, 0.5, 1e-15);
    EXPECT_GT(p.alpha_p, 0.0);
    EXPECT_GT(p.alpha_n, 0.5);
}

TEST(Constraint, SafeAcrossRange)
{
    for (double r = -1e4; r <= 1e4; r += 7.3) {
        for (double s : {-1e4, -745.0, -40.0, 0.0, 40.0, 1e4, r}) {
            const auto p = constrain({r, s}, kHyper, ActivationKind::XIelu);
            ASSERT_GT(p.alpha_p, 0.0) << r;
            ASSERT_GT(p.alpha_n, 0.5) << s;
            const auto q = constrain({r, s}, kHyper, ActivationKind::XIPRelu);
            ASSERT_GT(q.alpha_p, 0.0);
            ASSERT_GT(q.alpha_n, 0.0);
        }
    }
}

TEST(Constraint, Policies)
{
    EXPECT_EQ(constraint_policy(ActivationKind::XIelu), ConstraintPolicy::ShiftedSoftplus);
    EXPECT_EQ(constraint_policy(ActivationKind::XIPRelu), ConstraintPolicy::Softplus);
    EXPECT_EQ(constraint_policy(ActivationKind::XSilu), ConstraintPolicy::Identity);
    EXPECT_EQ(constraint_policy(ActivationKind::Relu2), ConstraintPolicy::None);
    const auto p = constrain({-0.7, 3.0}, kHyper, ActivationKind::XSilu);
    EXPECT_EQ(p.alpha_p, -0.7);
    EXPECT_FALSE(has_trainable_params(ActivationKind::Silu));
    EXPECT_TRUE(has_trainable_params(ActivationKind::XSilu));
}

TEST(Constraint, UnconstrainRejectsInvalid)
{
    EXPECT_THROW(unconstrain({0.8, 0.4}, kHyper, ActivationKind::XIelu), std::domain_error);
    EXPECT_THROW(unconstrain({-0.1, 0.8}, kHyper, ActivationKind::XIPRelu), std::domain_error);
}

TEST(Constraint, DerivativeIsSigmoid)
{
    const RawParams raw{0.3, -1.2};
    const auto d = constraint_derivative(raw, ActivationKind::XIelu);
    EXPECT_DOUBLE_EQ(d.d_alpha_p, sigmoid(0.3));
    EXPECT_DOUBLE_EQ(d.d_alpha_n, sigmoid(-1.2));
    const double h = 1e-6;
    const double fd = (constrain({raw.alpha_p_raw + h, raw.alpha_n_raw}, kHyper, ActivationKind::XIelu).alpha_p -
                       constrain({raw.alpha_p_raw - h, raw.alpha_n_raw}, kHyper, ActivationKind::XIelu).alpha_p) /
                      (2 * h);
    EXPECT_NEAR(fd, d.d_alpha_p, 1e-9);
    EXPECT_EQ(constraint_derivative(raw, ActivationKind::XSilu).d_alpha_p, 1.0);
}

TEST(Xielu, TabulatedPoints)
{
    EXPECT_NEAR(xielu_fwd(1.0, kInit, kHyper), 1.3, 1e-12);
    EXPECT_EQ(xielu_fwd(0.0, kInit, kHyper), 0.0);
    EXPECT_NEAR(xielu_fwd(-1.0, kInit, kHyper), kXieluMinus1, 1e-12);
    EXPECT_NEAR(xielu_dx(1.0, kInit, kHyper), 2.1, 1e-12);
    EXPECT_EQ(xielu_dx(0.0, kInit, kHyper), 0.5);
    EXPECT_NEAR(xielu_dx(-20.0, kInit, kHyper), kXieluDxMinus20, 1e-12);
}

TEST(Xielu, DParams)
{
    auto d = xielu_dparams(2.0, kInit, kHyper);
    EXPECT_EQ(d.d_alpha_p, 4.0);
    EXPECT_EQ(d.d_alpha_n, 0.0);
    d = xielu_dparams(0.0, kInit, kHyper);
    EXPECT_EQ(d.d_alpha_p, 0.0);
    EXPECT_EQ(d.d_alpha_n, 0.0);
    d = xielu_dparams(-1.0, kInit, kHyper);
    EXPECT_EQ(d.d_alpha_p, 0.0);
    EXPECT_NEAR(d.d_alpha_n, kExpMinus1, 1e-15);
    for (double x = -30.0; x < 0.0; x += 0.37) {
        EXPECT_GE(xielu_dparams(x, kInit, kHyper).d_alpha_n, 0.0);
    }
}

TEST(Xielu, NegativeGradientRange)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> an(0.55, 3.5);
    std::uniform_real_distribution<double> xs(-40.0, 0.0);
    for (int i = 0; i < 200; ++i) {
        const ConstrainedParams p{0.8, an(rng)};
        double prev_x = -60.0;
        double prev = xielu_dx(prev_x, p, kHyper);
        for (double x = -59.5; x <= 0.0; x += 0.5) {
            const double g = xielu_dx(x, p, kHyper);
            ASSERT_LE(g, 0.5);
            // strictness needs alpha_n e^x to survive rounding against the O(1) sum
            if (x > -30.0) {
                ASSERT_GT(g, 0.5 - p.alpha_n);
                ASSERT_GT(g, prev) << "not strictly increasing between " << prev_x << " and " << x;
            } else {
                ASSERT_GE(g, 0.5 - p.alpha_n);
                ASSERT_GE(g, prev);
            }
            prev = g;
            prev_x = x;
        }
        EXPECT_LT(xielu_dx(-1e-9, p, kHyper), 0.5);
        // beyond x* = ln(1 - beta/alpha_n) the gradient is negative
        const double x_star = std::log(1.0 - 0.5 / p.alpha_n);
        for (int j = 0; j < 20; ++j) {
            const double x = x_star - 1e-6 - std::abs(xs(rng));
            EXPECT_LT(xielu_dx(x, p, kHyper), 0.0) << x;
        }
    }
}

TEST(Xielu, PositiveGradientGrowsLinearly)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> xs(0.0, 8.0);
    for (int i = 0; i < 500; ++i) {
        double x1 = xs(rng) + 1e-9;
        double x2 = xs(rng) + 1e-9;
        if (x1 > x2) {
            std::swap(x1, x2);
        }
        const double lhs = xielu_dx(x2, kInit, kHyper) - xielu_dx(x1, kInit, kHyper);
        EXPECT_NEAR(lhs, 2.0 * 0.8 * (x2 - x1), 1e-12);
    }
}

TEST(Xielu, ClampModeIsConsistent)
{
    FixedHyper h;
    h.exp_path = NegativeExpPath::Clamp;
    // identical away from the clamp region
    EXPECT_DOUBLE_EQ(xielu_fwd(-1.0, kInit, h), xielu_fwd(-1.0, kInit, kHyper));
    // inside (eps, 0] both forward and backward use the clamped argument
    const double x = -1e-7;
    const double em1 = std::expm1(h.eps);
    EXPECT_DOUBLE_EQ(xielu_fwd(x, kInit, h), 0.8 * em1 - 0.8 * x + 0.5 * x);
    EXPECT_DOUBLE_EQ(xielu_dx(x, kInit, h), 0.8 * em1 + 0.5);
    EXPECT_DOUBLE_EQ(xielu_dparams(x, kInit, h).d_alpha_n, em1 - x);
}

TEST(Xiprelu, TabulatedPoints)
{
    EXPECT_NEAR(xiprelu_fwd(2.0, kInit, kHyper), 4.2, 1e-12);
    EXPECT_EQ(xiprelu_fwd(0.0, kInit, kHyper), 0.0);
    EXPECT_NEAR(xiprelu_fwd(-2.0, kInit, kHyper), 2.2, 1e-12);
    EXPECT_NEAR(xiprelu_dx(-2.0, kInit, kHyper), -2.7, 1e-12);
    EXPECT_EQ(xiprelu_dx(0.0, kInit, kHyper), 0.5);
    EXPECT_NEAR(xiprelu_dx(3.0, kInit, kHyper), 5.3, 1e-12);
}

TEST(Xiprelu, DParams)
{
    auto d = xiprelu_dparams(3.0, kInit, kHyper);
    EXPECT_EQ(d.d_alpha_p, 9.0);
    EXPECT_EQ(d.d_alpha_n, 0.0);
    d = xiprelu_dparams(0.0, kInit, kHyper);
    EXPECT_EQ(d.d_alpha_p, 0.0);
    EXPECT_EQ(d.d_alpha_n, 0.0);
    d = xiprelu_dparams(-3.0, kInit, kHyper);
    EXPECT_EQ(d.d_alpha_p, 0.0);
    EXPECT_EQ(d.d_alpha_n, 9.0);
}

TEST(Continuity, OriginForRandomDraws)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const ConstrainedParams p{0.05 + 3 * u(rng), 0.55 + 3 * u(rng)};
        for (auto kind : {ActivationKind::XIelu, ActivationKind::XIPRelu}) {
            const auto l = branch_eval(kind, Side::Left, 0.0, p, kHyper);
            const auto r = branch_eval(kind, Side::Right, 0.0, p, kHyper);
            EXPECT_LT(std::abs(r.value - l.value), 1e-12);
            EXPECT_LT(std::abs(r.slope - l.slope), 1e-12);
            EXPECT_EQ(activation_fwd(kind, 0.0, p, kHyper), 0.0);
        }
    }
}

TEST(Baselines, TabulatedPoints)
{
    const ConstrainedParams none{};
    EXPECT_NEAR(baseline_fwd(ActivationKind::Elu, -1.0, none, kHyper), kEluMinus1, 1e-15);
    EXPECT_EQ(baseline_fwd(ActivationKind::Relu2, 3.0, none, kHyper), 9.0);
    EXPECT_EQ(baseline_dx(ActivationKind::Relu2, 3.0, none, kHyper), 6.0);
    EXPECT_EQ(baseline_fwd(ActivationKind::Relu2, -5.0, none, kHyper), 0.0);
    for (double a : {-1.0, 0.0, 0.5, 2.0}) {
        EXPECT_EQ(baseline_fwd(ActivationKind::XSilu, 0.0, {a, 0.0}, kHyper), 0.0);
    }
    EXPECT_NEAR(baseline_fwd(ActivationKind::XSilu, 1.0, {0.5, 0.0}, kHyper), kXsilu1, 1e-15);
    EXPECT_NEAR(baseline_dx(ActivationKind::XSilu, 1.0, {0.5, 0.0}, kHyper), kXsiluDx1, 1e-15);
}

TEST(Baselines, SiluAndGeluReference)
{
    const ConstrainedParams none{};
    struct Row {
        double x, silu, silu_dx, gelu, gelu_dx;
    };
    const Row rows[] = {
        {1.0, 0.73105857863000487925, 0.92767051187148673179, 0.84119199060827670478, 1.0829640838457825551},
        {-1.0, -0.26894142136999512075, 0.072329488128513268211, -0.15880800939172329522,
         -0.08296408384578255514},
        {2.5, 2.310354549946891122, 1.0994011113415268411, 2.4849157339100014179, 1.0379515762126661826},
    };
    for (const auto& r : rows) {
        EXPECT_NEAR(baseline_fwd(ActivationKind::Silu, r.x, none, kHyper), r.silu, 1e-15);
        EXPECT_NEAR(baseline_dx(ActivationKind::Silu, r.x, none, kHyper), r.silu_dx, 1e-15);
        EXPECT_NEAR(baseline_fwd(ActivationKind::GeluTanh, r.x, none, kHyper), r.gelu, 1e-15);
        EXPECT_NEAR(baseline_dx(ActivationKind::GeluTanh, r.x, none, kHyper), r.gelu_dx, 1e-15);
    }
}

TEST(Baselines, XsiluReducesToSilu)
{
    for (double x = -10.0; x <= 10.0; x += 0.013) {
        const double a = baseline_fwd(ActivationKind::XSilu, x, {0.0, 0.0}, kHyper);
        const double b = baseline_fwd(ActivationKind::Silu, x, {}, kHyper);
        EXPECT_LT(std::abs(a - b), 1e-15) << x;
    }
}

TEST(Baselines, XsiluParamGradient)
{
    const double x = 1.7;
    const double h = 1e-6;
    const double fd = (baseline_fwd(ActivationKind::XSilu, x, {0.3 + h, 0}, kHyper) -
                       baseline_fwd(ActivationKind::XSilu, x, {0.3 - h, 0}, kHyper)) /
                      (2 * h);
    EXPECT_NEAR(activation_dparams(ActivationKind::XSilu, x, {0.3, 0}, kHyper).d_alpha_p, fd, 1e-9);
}

TEST(Baselines, DispatchForwardsToKernels)
{
    for (double x : {-2.0, -0.5, 0.0, 1.5}) {
        EXPECT_EQ(activation_fwd(ActivationKind::XIelu, x, kInit, kHyper), xielu_fwd(x, kInit, kHyper));
        EXPECT_EQ(activation_dx(ActivationKind::XIPRelu, x, kInit, kHyper), xiprelu_dx(x, kInit, kHyper));
    }
}

TEST(Breakpoints, OnlyPiecewiseKinds)
{
    EXPECT_EQ(breakpoints(ActivationKind::XIelu).size(), 1u);
    EXPECT_EQ(breakpoints(ActivationKind::Relu).size(), 1u);
    EXPECT_TRUE(breakpoints(ActivationKind::Silu).empty());
    EXPECT_TRUE(breakpoints(ActivationKind::GeluTanh).empty());
}

TEST(OpCount, Census)
{
    EXPECT_EQ(op_count(ActivationKind::XIelu), (OpCount{1, 4, 4, 0, 1}));
    EXPECT_EQ(op_count(ActivationKind::GeluTanh), (OpCount{2, 6, 4, 1, 0}));
    EXPECT_EQ(op_count(ActivationKind::Silu), (OpCount{1, 2, 1, 1, 0}));
    auto r2 = op_count(ActivationKind::Relu2);
    r2.mults += 3;
    r2.adds += 1;
    EXPECT_EQ(op_count(ActivationKind::XIPRelu), r2);
}
