#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace xact {

enum class CooldownStyle { OneMinusSqrt, Cosine };

std::string_view to_string(CooldownStyle style);
std::optional<CooldownStyle> parse_cooldown_style(std::string_view name);

/// Linear warmup, constant plateau, then a cooldown to min_lr.
struct LrSchedule {
    CooldownStyle style = CooldownStyle::OneMinusSqrt;
    double max_lr = 1e-3;
    double min_lr = 0.0;
    std::size_t warmup_steps = 0;
    std::size_t constant_steps = 0;
    std::size_t cooldown_steps = 0;

    std::size_t total_steps() const { return warmup_steps + constant_steps + cooldown_steps; }

    /// Throws std::invalid_argument unless max_lr >= min_lr >= 0.
    void validate() const;
};

/// Learning rate at `step`; steps past the end stay at the final value.
double lr_at(const LrSchedule& s, double step);

/// Warmup ramp max_lr * step / warmup_steps.
double warmup_lr(const LrSchedule& s, double step);

/// Cooldown value at fraction tau in [0, 1] of the cooldown phase.
/// 1-sqrt: max_lr (1 - sqrt(tau)) + min_lr sqrt(tau).
/// cosine: min_lr + (max_lr - min_lr)(1 + cos(pi tau)) / 2.
double cooldown_lr(const LrSchedule& s, double tau);

} // namespace xact
