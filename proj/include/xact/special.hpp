#pragma once

#include <cmath>

namespace xact {

/// Branch threshold shared by softplus and sigmoid. Beyond |x| = 30 the
/// correction terms are below single-precision resolution.
inline constexpr double kOverflowThreshold = 30.0;

/// ln(1 + e^x) without overflow.
double softplus(double x);

/// ln(e^y - 1), the inverse of softplus. Throws std::domain_error for y <= 0.
double inverse_softplus(double y);

/// 1 / (1 + e^-x); this is also d softplus / dx.
double sigmoid(double x);

/// e^x - 1 without cancellation near zero.
double expm1_stable(double x);

} // namespace xact
