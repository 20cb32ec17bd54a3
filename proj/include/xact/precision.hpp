#pragma once

#include <optional>
#include <string_view>

namespace xact {

/// Arithmetic precision used by the stability probe. Emulated modes round the
/// result of every operation to the target significand width with
/// round-to-nearest-even; the exponent range stays that of double.
enum class PrecisionMode { Double, EmulatedSingle, EmulatedBf16 };

std::string_view to_string(PrecisionMode mode);
std::optional<PrecisionMode> parse_precision_mode(std::string_view name);

/// Significand bits including the implicit leading one: 53, 24 or 8.
int significand_bits(PrecisionMode mode);

/// Unit roundoff 2^-bits of the mode.
double unit_roundoff(PrecisionMode mode);

/// x rounded to `bits` significand bits, ties to even.
double round_to_bits(double x, int bits);
double round_to(PrecisionMode mode, double x);

struct StabilityProbe {
    PrecisionMode mode = PrecisionMode::Double;
    double x = 0.0;
    double naive = 0.0;     ///< round(round(e^x) - 1)
    double stable = 0.0;    ///< round(expm1(x))
    double reference = 0.0; ///< expm1(x) in double
    double naive_rel_err = 0.0;
    double stable_rel_err = 0.0;
};

/// Compares e^x - 1 computed naively and via expm1 in the given precision.
/// Throws std::domain_error unless x < 0.
StabilityProbe stability_probe(double x, PrecisionMode mode);

} // namespace xact
