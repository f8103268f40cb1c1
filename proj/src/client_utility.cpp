#include <eafl/client_utility.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eafl {

void UtilityParams::validate() const {
    if (!(round_deadline_s > 0.0)) {
        throw std::invalid_argument("round_deadline_s must be > 0");
    }
    if (!(straggler_alpha >= 0.0)) {
        throw std::invalid_argument("straggler_alpha must be >= 0");
    }
    if (!(blend_f >= 0.0 && blend_f <= 1.0)) {
        throw std::invalid_argument("blend_f must lie in [0,1]");
    }
}

double straggler_penalty(double duration_s, const UtilityParams& params) {
    if (duration_s <= params.round_deadline_s) {
        return 1.0;
    }
    return std::pow(params.round_deadline_s / duration_s, params.straggler_alpha);
}

double statistical_system_utility(const ClientStats& stats, const UtilityParams& params) {
    if (stats.sample_count <= 0) {
        return 0.0;
    }
    const double n = static_cast<double>(stats.sample_count);
    const double statistical = n * std::sqrt(stats.sum_sq_loss / n);
    return statistical * straggler_penalty(stats.last_duration_s, params);
}

double power_term(const BatteryState& battery, double projected_cost_joules) {
    if (!(projected_cost_joules >= 0.0)) {
        throw std::invalid_argument("projected cost must be >= 0");
    }
    const double pct =
        100.0 * (battery.remaining_joules() - projected_cost_joules) / battery.capacity_joules();
    return std::max(0.0, pct);
}

std::vector<double> minmax_normalize(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("cannot normalize an empty list");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    std::vector<double> out(values.size(), 1.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            out[i] = std::clamp((values[i] - lo) / range, 0.0, 1.0);
        }
    }
    return out;
}

double eafl_reward(double util_norm, double power_norm, double f) {
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(util_norm) || !unit(power_norm) || !unit(f)) {
        throw std::invalid_argument("eafl_reward arguments must lie in [0,1]");
    }
    return f * util_norm + (1.0 - f) * power_norm;
}

} // namespace eafl
