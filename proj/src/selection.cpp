#include <eafl/selection.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace eafl {

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
    case StrategyKind::Random:
        return "random";
    case StrategyKind::Oort:
        return "oort";
    case StrategyKind::Eafl:
        return "eafl";
    }
    return "?";
}

StrategyKind parse_strategy(std::string_view text) {
    std::string key(text);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (key == "random") {
        return StrategyKind::Random;
    }
    if (key == "oort") {
        return StrategyKind::Oort;
    }
    if (key == "eafl") {
        return StrategyKind::Eafl;
    }
    throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

bool CandidatePool::add(Candidate candidate) {
    if (candidate.battery.dropped()) {
        return false;
    }
    entries_.push_back(std::move(candidate));
    return true;
}

namespace {

void check_k(int k) {
    if (k < 1) {
        throw std::invalid_argument("k must be >= 1");
    }
}

// Pool indices ordered by ascending client id.
std::vector<std::size_t> id_order(const CandidatePool& pool) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pool.entries()[a].id < pool.entries()[b].id;
    });
    return order;
}

// Moves `count` uniformly chosen elements of `items` to its front (partial Fisher-Yates).
void partial_shuffle(std::vector<std::size_t>& items, std::size_t count, Rng& rng) {
    for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, items.size() - i));
        std::swap(items[i], items[j]);
    }
}

} // namespace

std::vector<RewardBreakdown> score_candidates(const CandidatePool& pool, StrategyKind strategy,
                                              const UtilityParams& params) {
    const auto& entries = pool.entries();
    std::vector<RewardBreakdown> scores(entries.size());
    if (entries.empty()) {
        return scores;
    }

    double explored_max = 0.0;
    bool any_explored = false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].stats.has_feedback()) {
            scores[i].util_raw = statistical_system_utility(entries[i].stats, params);
            explored_max = any_explored ? std::max(explored_max, scores[i].util_raw)
                                        : scores[i].util_raw;
            any_explored = true;
        }
    }
    // Clients without feedback start at the best observed utility so they get explored.
    const double optimistic = any_explored ? explored_max : 1.0;
    std::vector<double> util(entries.size());
    std::vector<double> power(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!entries[i].stats.has_feedback()) {
            scores[i].util_raw = optimistic;
        }
        util[i] = scores[i].util_raw;
        scores[i].power_raw = power_term(entries[i].battery, entries[i].projected_cost_joules);
        power[i] = scores[i].power_raw;
    }

    const auto util_norm = minmax_normalize(util);
    const auto power_norm = minmax_normalize(power);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        scores[i].util_norm = util_norm[i];
        scores[i].power_norm = power_norm[i];
        scores[i].reward = strategy == StrategyKind::Eafl
                               ? eafl_reward(util_norm[i], power_norm[i], params.blend_f)
                               : util_norm[i];
    }
    return scores;
}

Selection select_random(const CandidatePool& pool, int k, Rng& rng) {
    check_k(k);
    if (pool.empty()) {
        return std::nullopt;
    }
    auto order = id_order(pool);
    const auto take = std::min(static_cast<std::size_t>(k), order.size());
    partial_shuffle(order, take, rng);

    std::vector<ClientId> picked;
    picked.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        picked.push_back(pool.entries()[order[i]].id);
    }
    return picked;
}

Selection select_top_k(const CandidatePool& pool, int k, StrategyKind strategy,
                       const UtilityParams& params, double epsilon, Rng& rng) {
    check_k(k);
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in [0,1]");
    }
    if (strategy == StrategyKind::Random) {
        return select_random(pool, k, rng);
    }
    if (pool.empty()) {
        return std::nullopt;
    }

    const auto scores = score_candidates(pool, strategy, params);
    auto order = id_order(pool);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a].reward > scores[b].reward;
    });

    const auto take = std::min(static_cast<std::size_t>(k), order.size());
    const auto exploit = std::min(
        take, static_cast<std::size_t>(std::ceil((1.0 - epsilon) * static_cast<double>(k))));

    std::vector<ClientId> picked;
    picked.reserve(take);
    for (std::size_t i = 0; i < exploit; ++i) {
        picked.push_back(pool.entries()[order[i]].id);
    }

    // Exploration slots come from the unpicked remainder, visited in id order.
    std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(exploit), order.end());
    std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
        return pool.entries()[a].id < pool.entries()[b].id;
    });
    partial_shuffle(rest, take - exploit, rng);
    for (std::size_t i = 0; i < take - exploit; ++i) {
        picked.push_back(pool.entries()[rest[i]].id);
    }
    return picked;
}

double transfer_seconds(std::int64_t bytes, double mbps) {
    if (!(mbps > 0.0)) {
        throw std::invalid_argument("link rate must be > 0");
    }
    return static_cast<double>(bytes) * 8.0 / (mbps * 1e6);
}

double projected_round_cost(const DeviceProfile& profile, std::int64_t model_bytes,
                            std::int64_t samples, int local_epochs) {
    if (model_bytes < 0 || samples < 0 || local_epochs < 0) {
        throw std::invalid_argument("projected_round_cost inputs must be non-negative");
    }
    const double train_s = static_cast<double>(samples) * local_epochs /
                           throughput_samples_per_sec(profile);
    const double compute_j = computation_energy(profile.avg_power_watts, train_s);

    const double down_h = transfer_seconds(model_bytes, profile.downlink_mbps) / 3600.0;
    const double up_h = transfer_seconds(model_bytes, profile.uplink_mbps) / 3600.0;
    const double comm_pct = communication_energy_pct(profile.medium, Direction::Download, down_h) +
                            communication_energy_pct(profile.medium, Direction::Upload, up_h);
    return compute_j + comm_pct / 100.0 * profile_capacity_joules(profile);
}

} // namespace eafl
