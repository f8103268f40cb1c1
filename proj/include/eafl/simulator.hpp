#pragma once

/// @file simulator.hpp
/// @brief Round-by-round orchestration of selection, timed client work, energy accounting,
/// mid-round dropouts, aggregation and metric capture.
///
/// Simulated time only advances at round boundaries; within a round each participant walks
/// through download, training and upload, and its battery is checked after every phase. A
/// participant whose battery empties before its own completion instant contributes nothing.

#include <eafl/client_utility.hpp>
#include <eafl/device_energy.hpp>
#include <eafl/fl_engine.hpp>
#include <eafl/selection.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace eafl {

struct SimConfig {
    int n_clients = 100;
    int rounds = 500;
    int k_per_round = kDefaultParticipants;
    double round_deadline_s = 600.0;
    StrategyKind strategy = StrategyKind::Random;
    double blend_f = 0.25;
    double epsilon = kDefaultEpsilon;
    std::uint64_t seed = 1;
    /// HighEnd, MidRange, LowEnd fractions.
    std::array<double, 3> tier_mix{0.3, 0.4, 0.3};
    double wifi_fraction = 0.5;
    std::int64_t model_bytes = 10'000'000;
    TaskConfig task;
    double report_quorum = 0.5;

    double straggler_alpha = 2.0;
    double learning_rate = 0.05;
    int batch_size = 20;
    int local_epochs = 1;
    /// Device work units (throughput is measured in these) spent per synthetic training sample.
    double work_per_sample = 10.0;
    YogiParams yogi;

    bool battery_constrained = true;
    double battery_voltage = kDefaultBatteryVoltage;
    double idle_drain_pct_per_hour = kDefaultIdleDrainPctPerHour;
    double busy_other_prob = kDefaultBusyOtherProb;
    double initial_battery_min_pct = 20.0;
    double initial_battery_max_pct = 100.0;
    double min_round_s = 60.0;
    /// Optional `client_id,tier,battery_pct,medium` file replacing the synthetic fleet.
    std::string fleet_csv;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    [[nodiscard]] UtilityParams utility_params() const;
    /// Work units a client with `shard_size` samples processes per round.
    [[nodiscard]] std::int64_t device_samples(std::size_t shard_size) const;
};

struct ClientRuntime {
    DeviceProfile profile;
    BatteryState battery;
    ClientStats stats;
    std::int64_t times_selected = 0;
};

struct RoundRecord {
    int round = 0;
    double sim_time_h = 0.0;
    double round_duration_s = 0.0;
    double accuracy = 0.0;
    double train_loss = 0.0;
    int dropouts_cumulative = 0;
    double jains_index = 1.0;
    double mean_battery_pct = 0.0;
    int participants_completed = 0;
    bool round_failed = false;
};

/// Energy charged to the fleet during one round, split by cause (J).
struct RoundEnergy {
    double computation = 0.0;
    double communication = 0.0;
    double background = 0.0;

    [[nodiscard]] double total() const { return computation + communication + background; }
};

/// (sum x)^2 / (n * sum x^2); an all-zero vector counts as perfectly fair.
[[nodiscard]] double jains_index(std::span<const std::int64_t> times_selected);

class Simulator {
public:
    explicit Simulator(SimConfig config);

    /// Runs the next round. With an empty pool this records a failed round that still advances
    /// time by min_round_s.
    RoundRecord run_round();

    [[nodiscard]] bool pool_empty() const;
    [[nodiscard]] int next_round() const { return next_round_; }

    [[nodiscard]] const SimConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<ClientRuntime>& clients() const { return clients_; }
    [[nodiscard]] const ModelState& model() const { return model_; }
    [[nodiscard]] const FleetData& data() const { return data_; }
    [[nodiscard]] const RoundEnergy& last_round_energy() const { return last_energy_; }
    /// Participants of the last round in selection order.
    [[nodiscard]] const std::vector<ClientId>& last_selection() const { return last_selection_; }
    /// Clients whose battery emptied during the last round's work.
    [[nodiscard]] const std::vector<ClientId>& last_mid_round_dropouts() const {
        return last_mid_round_dropouts_;
    }

    [[nodiscard]] CandidatePool candidate_pool() const;

private:
    void build_fleet();
    bool charge(ClientRuntime& client, double joules, double& bucket);

    SimConfig config_;
    UtilityParams utility_;
    std::vector<ClientRuntime> clients_;
    FleetData data_;
    ModelState model_;
    int next_round_ = 0;
    double sim_time_s_ = 0.0;
    double last_train_loss_ = 0.0;
    RoundEnergy last_energy_;
    std::vector<ClientId> last_selection_;
    std::vector<ClientId> last_mid_round_dropouts_;
};

/// Runs config.rounds rounds, stopping early once every client has dropped.
[[nodiscard]] std::vector<RoundRecord> run_simulation(const SimConfig& config);

} // namespace eafl
