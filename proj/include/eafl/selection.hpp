#pragma once

/// @file selection.hpp
/// @brief Per-round participant selection: uniform random, Oort-style utility, and EAFL reward.

#include <eafl/client_utility.hpp>
#include <eafl/device_energy.hpp>
#include <eafl/rng.hpp>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace eafl {

enum class StrategyKind { Random, Oort, Eafl };

[[nodiscard]] std::string_view to_string(StrategyKind kind);
[[nodiscard]] StrategyKind parse_strategy(std::string_view text);

inline constexpr double kDefaultEpsilon = 0.1;
inline constexpr int kDefaultParticipants = 10;

/// Snapshot of one available client as seen by the selector.
struct Candidate {
    ClientId id = 0;
    ClientStats stats;
    BatteryState battery;
    double projected_cost_joules = 0.0;
};

/// Available clients for one round. Dropped clients are never admitted.
class CandidatePool {
public:
    explicit CandidatePool(int round_index = 0) : round_index_(round_index) {}

    /// Adds the candidate unless its battery has dropped; returns whether it was added.
    bool add(Candidate candidate);

    [[nodiscard]] const std::vector<Candidate>& entries() const { return entries_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }
    [[nodiscard]] int round_index() const { return round_index_; }

private:
    std::vector<Candidate> entries_;
    int round_index_;
};

/// Selection result; std::nullopt means the pool was empty and no round can form.
using Selection = std::optional<std::vector<ClientId>>;

/// Per-candidate scores, index-aligned with pool.entries(). For Oort the reward equals util_norm.
[[nodiscard]] std::vector<RewardBreakdown> score_candidates(const CandidatePool& pool,
                                                            StrategyKind strategy,
                                                            const UtilityParams& params);

[[nodiscard]] Selection select_random(const CandidatePool& pool, int k, Rng& rng);

/// Takes the ceil((1 - epsilon) * k) best-scoring candidates (ties to the lower id) and fills the
/// remaining slots uniformly from the rest. StrategyKind::Random defers to select_random.
[[nodiscard]] Selection select_top_k(const CandidatePool& pool, int k, StrategyKind strategy,
                                     const UtilityParams& params, double epsilon, Rng& rng);

[[nodiscard]] double transfer_seconds(std::int64_t bytes, double mbps);

/// Energy (J) a client would spend on one more round: local compute plus the download and upload
/// of `model_bytes`.
[[nodiscard]] double projected_round_cost(const DeviceProfile& profile, std::int64_t model_bytes,
                                          std::int64_t samples, int local_epochs);

} // namespace eafl
