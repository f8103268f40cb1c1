#pragma once

/// @file client_utility.hpp
/// @brief Oort statistical/system utility, the battery power term and the blended EAFL reward.

#include <eafl/device_energy.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace eafl {

/// Training feedback a client reported the last time it completed a round.
struct ClientStats {
    std::int64_t sample_count = 0;
    double sum_sq_loss = 0.0;
    double last_duration_s = 0.0;
    std::int64_t rounds_participated = 0;

    [[nodiscard]] bool has_feedback() const { return rounds_participated > 0; }
};

struct UtilityParams {
    double round_deadline_s = 600.0;
    double straggler_alpha = 2.0;
    double blend_f = 0.25;

    void validate() const;
};

struct RewardBreakdown {
    double util_raw = 0.0;
    double util_norm = 0.0;
    double power_raw = 0.0;
    double power_norm = 0.0;
    double reward = 0.0;
};

/// Multiplicative penalty (T/t)^a applied when t exceeds the deadline T, else 1.
[[nodiscard]] double straggler_penalty(double duration_s, const UtilityParams& params);

/// |B| * sqrt(sum(loss^2) / |B|) times the straggler penalty; zero for a client without samples.
[[nodiscard]] double statistical_system_utility(const ClientStats& stats,
                                                const UtilityParams& params);

/// Remaining battery percentage after spending `projected_cost_joules`, floored at zero.
[[nodiscard]] double power_term(const BatteryState& battery, double projected_cost_joules);

/// Maps values affinely onto [0,1]; a constant input maps to all ones.
[[nodiscard]] std::vector<double> minmax_normalize(std::span<const double> values);

[[nodiscard]] double eafl_reward(double util_norm, double power_norm, double f);

} // namespace eafl
