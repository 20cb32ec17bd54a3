#include "xact/precision.hpp"

#include "xact/special.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xact {

std::string_view to_string(PrecisionMode mode)
{
    switch (mode) {
    case PrecisionMode::Double: return "double";
    case PrecisionMode::EmulatedSingle: return "single";
    case PrecisionMode::EmulatedBf16: return "bf16";
    }
    return "unknown";
}

std::optional<PrecisionMode> parse_precision_mode(std::string_view name)
{
    for (auto m : {PrecisionMode::Double, PrecisionMode::EmulatedSingle, PrecisionMode::EmulatedBf16}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

int significand_bits(PrecisionMode mode)
{
    switch (mode) {
    case PrecisionMode::Double: return 53;
    case PrecisionMode::EmulatedSingle: return 24;
    case PrecisionMode::EmulatedBf16: return 8;
    }
    return 53;
}

double unit_roundoff(PrecisionMode mode) { return std::ldexp(1.0, -significand_bits(mode)); }

double round_to_bits(double x, int bits)
{
    if (bits >= 53 || x == 0.0 || !std::isfinite(x)) {
        return x;
    }
    int exponent = 0;
    const double mantissa = std::frexp(x, &exponent); // |mantissa| in [0.5, 1)
    // nearbyint honours the default round-to-nearest-even mode
    const double scaled = std::nearbyint(std::ldexp(mantissa, bits));
    return std::ldexp(scaled, exponent - bits);
}

double round_to(PrecisionMode mode, double x) { return round_to_bits(x, significand_bits(mode)); }

StabilityProbe stability_probe(double x, PrecisionMode mode)
{
    if (!(x < 0.0)) {
        throw std::domain_error("stability_probe: x must be negative, got " + std::to_string(x));
    }
    StabilityProbe p;
    p.mode = mode;
    p.x = round_to(mode, x);
    p.reference = expm1_stable(p.x);
    const double e = round_to(mode, std::exp(p.x));
    p.naive = round_to(mode, e - 1.0);
    p.stable = round_to(mode, expm1_stable(p.x));
    p.naive_rel_err = std::abs(p.naive - p.reference) / std::abs(p.reference);
    p.stable_rel_err = std::abs(p.stable - p.reference) / std::abs(p.reference);
    return p;
}

} // namespace xact
