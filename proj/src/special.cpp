#include "xact/special.hpp"

#include <stdexcept>
#include <string>

namespace xact {

double softplus(double x)
{
    if (x > kOverflowThreshold) {
        return x;
    }
    if (x < -kOverflowThreshold) {
        return std::exp(x);
    }
    return std::log1p(std::exp(x));
}

double inverse_softplus(double y)
{
    if (!(y > 0.0)) {
        throw std::domain_error("inverse_softplus: argument must be positive, got " + std::to_string(y));
    }
    // ln(e^y - 1) = y + ln(1 - e^-y); the second form stays finite for large y
    // and accurate for small y.
    return y + std::log(-std::expm1(-y));
}

double sigmoid(double x)
{
    if (x < -kOverflowThreshold) {
        return std::exp(x);
    }
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double expm1_stable(double x)
{
    return std::expm1(x);
}

} // namespace xact
