#include "xact/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xact {

std::string_view to_string(CooldownStyle style)
{
    return style == CooldownStyle::Cosine ? "cosine" : "1-sqrt";
}

std::optional<CooldownStyle> parse_cooldown_style(std::string_view name)
{
    if (name == "1-sqrt") {
        return CooldownStyle::OneMinusSqrt;
    }
    if (name == "cosine") {
        return CooldownStyle::Cosine;
    }
    return std::nullopt;
}

void LrSchedule::validate() const
{
    if (!(min_lr >= 0.0) || !(max_lr >= min_lr)) {
        throw std::invalid_argument("lr schedule: need max_lr >= min_lr >= 0");
    }
}

double warmup_lr(const LrSchedule& s, double step)
{
    return s.warmup_steps == 0 ? s.max_lr : s.max_lr * step / double(s.warmup_steps);
}

double cooldown_lr(const LrSchedule& s, double tau)
{
    tau = std::clamp(tau, 0.0, 1.0);
    if (s.style == CooldownStyle::Cosine) {
        return s.min_lr + 0.5 * (s.max_lr - s.min_lr) * (1.0 + std::cos(std::numbers::pi * tau));
    }
    const double r = std::sqrt(tau);
    return s.max_lr * (1.0 - r) + s.min_lr * r;
}

double lr_at(const LrSchedule& s, double step)
{
    step = std::max(step, 0.0);
    const double warm = double(s.warmup_steps);
    const double plateau_end = warm + double(s.constant_steps);
    if (step < warm) {
        return warmup_lr(s, step);
    }
    if (step < plateau_end) {
        return s.max_lr;
    }
    if (s.cooldown_steps == 0) {
        return s.max_lr;
    }
    return cooldown_lr(s, (step - plateau_end) / double(s.cooldown_steps));
}

} // namespace xact
