#include <eafl/simulator.hpp>

#include <eafl/rng.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace eafl {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

// Splits n items into exact per-bucket counts by largest remainder.
std::vector<int> apportion(int n, std::span<const double> fractions) {
    std::vector<int> counts(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double exact = fractions[i] * n;
        counts[i] = static_cast<int>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - counts[i], i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
        ++counts[remainders[i % remainders.size()].second];
    }
    return counts;
}

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[uniform_below(rng, i)]);
    }
}

} // namespace

void SimConfig::validate() const {
    require(rounds >= 1, "rounds must be >= 1");
    require(k_per_round >= 1, "k_per_round must be >= 1");
    require(round_deadline_s > 0.0, "round_deadline_s must be > 0");
    require(blend_f >= 0.0 && blend_f <= 1.0, "blend_f must lie in [0,1]");
    require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0,1]");
    for (const double f : tier_mix) {
        require(f >= 0.0 && f <= 1.0, "tier_mix fractions must lie in [0,1]");
    }
    require(std::abs(tier_mix[0] + tier_mix[1] + tier_mix[2] - 1.0) <= 1e-9,
            "tier_mix fractions must sum to 1");
    require(wifi_fraction >= 0.0 && wifi_fraction <= 1.0, "wifi_fraction must lie in [0,1]");
    require(model_bytes >= 0, "model_bytes must be >= 0");
    require(report_quorum > 0.0 && report_quorum <= 1.0, "report_quorum must lie in (0,1]");
    require(straggler_alpha >= 0.0, "straggler_alpha must be >= 0");
    require(learning_rate > 0.0, "learning_rate must be > 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(local_epochs >= 1, "local_epochs must be >= 1");
    require(work_per_sample > 0.0, "work_per_sample must be > 0");
    require(battery_voltage > 0.0, "battery_voltage must be > 0");
    require(idle_drain_pct_per_hour >= 0.0, "idle_drain_pct_per_hour must be >= 0");
    require(busy_other_prob >= 0.0 && busy_other_prob <= 1.0, "busy_other_prob must lie in [0,1]");
    require(initial_battery_min_pct >= 0.0 && initial_battery_min_pct <= initial_battery_max_pct &&
                initial_battery_max_pct <= 100.0,
            "initial battery range must satisfy 0 <= min <= max <= 100");
    require(min_round_s > 0.0, "min_round_s must be > 0");
    if (fleet_csv.empty()) {
        require(n_clients >= 1, "n_clients must be >= 1");
    }
    yogi.validate();
    task.validate();
    utility_params().validate();
}

std::int64_t SimConfig::device_samples(std::size_t shard_size) const {
    return std::llround(static_cast<double>(shard_size) * work_per_sample);
}

UtilityParams SimConfig::utility_params() const {
    return {round_deadline_s, straggler_alpha, blend_f};
}

double jains_index(std::span<const std::int64_t> times_selected) {
    if (times_selected.empty()) {
        throw std::invalid_argument("jains_index needs a non-empty list");
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto x : times_selected) {
        if (x < 0) {
            throw std::invalid_argument("selection counts must be >= 0");
        }
        const auto v = static_cast<double>(x);
        sum += v;
        sum_sq += v * v;
    }
    if (sum_sq == 0.0) {
        return 1.0;
    }
    return sum * sum / (static_cast<double>(times_selected.size()) * sum_sq);
}

Simulator::Simulator(SimConfig config) : config_(std::move(config)) {
    config_.validate();
    utility_ = config_.utility_params();
    build_fleet();
    if (static_cast<int>(clients_.size()) < config_.k_per_round) {
        std::cerr << "warning: fleet of " << clients_.size() << " clients is smaller than k_per_round="
                  << config_.k_per_round << "; selections are truncated to the pool size\n";
    }
    data_ = generate_fleet_data(config_.task, static_cast<int>(clients_.size()), config_.seed);
    model_ = ModelState::zeros(
        static_cast<std::size_t>(config_.task.feature_dim) * static_cast<std::size_t>(config_.task.num_labels),
        config_.yogi.tau);
    last_train_loss_ = std::log(static_cast<double>(config_.task.num_labels));
}

void Simulator::build_fleet() {
    auto rng = make_rng(config_.seed, 0, RngPurpose::Fleet);
    std::vector<FleetEntry> entries;

    if (!config_.fleet_csv.empty()) {
        entries = load_fleet_csv(config_.fleet_csv);
        require(!entries.empty(), "fleet csv '" + config_.fleet_csv + "' lists no clients");
        std::sort(entries.begin(), entries.end(), [](const FleetEntry& a, const FleetEntry& b) {
            return a.profile.client_id < b.profile.client_id;
        });
        config_.n_clients = static_cast<int>(entries.size());
    } else {
        const int n = config_.n_clients;
        std::vector<DeviceTier> tiers;
        const auto tier_counts = apportion(n, config_.tier_mix);
        const std::array all_tiers{DeviceTier::HighEnd, DeviceTier::MidRange, DeviceTier::LowEnd};
        for (std::size_t t = 0; t < all_tiers.size(); ++t) {
            tiers.insert(tiers.end(), static_cast<std::size_t>(tier_counts[t]), all_tiers[t]);
        }
        shuffle(tiers, rng);

        const std::array medium_mix{config_.wifi_fraction, 1.0 - config_.wifi_fraction};
        const auto medium_counts = apportion(n, medium_mix);
        std::vector<Medium> media(static_cast<std::size_t>(medium_counts[0]), Medium::WiFi);
        media.insert(media.end(), static_cast<std::size_t>(medium_counts[1]), Medium::ThreeG);
        shuffle(media, rng);

        const double span = config_.initial_battery_max_pct - config_.initial_battery_min_pct;
        for (int i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const double pct = config_.initial_battery_min_pct + span * uniform01(rng);
            entries.push_back({DeviceProfile::for_tier(i, tiers[idx], media[idx]), pct});
        }
    }

    clients_.clear();
    clients_.reserve(entries.size());
    for (auto& entry : entries) {
        entry.profile.battery_voltage = config_.battery_voltage;
        entry.profile.idle_drain_pct_per_hour = config_.idle_drain_pct_per_hour;
        entry.profile.busy_other_prob = config_.busy_other_prob;
        entry.profile.validate();
        ClientRuntime client;
        client.profile = entry.profile;
        client.battery = BatteryState::at_percent(profile_capacity_joules(entry.profile),
                                                  config_.battery_constrained ? entry.battery_pct : 100.0);
        clients_.push_back(client);
    }
}

bool Simulator::pool_empty() const {
    return std::none_of(clients_.begin(), clients_.end(),
                        [](const ClientRuntime& c) { return !c.battery.dropped(); });
}

CandidatePool Simulator::candidate_pool() const {
    CandidatePool pool(next_round_);
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        const auto& c = clients_[i];
        pool.add({c.profile.client_id, c.stats, c.battery,
                  projected_round_cost(c.profile, config_.model_bytes,
                                       config_.device_samples(data_.shards[i].size()),
                                       config_.local_epochs)});
    }
    return pool;
}

bool Simulator::charge(ClientRuntime& client, double joules, double& bucket) {
    if (config_.battery_constrained) {
        bucket += client.battery.withdraw(joules);
    }
    return !client.battery.dropped();
}

RoundRecord Simulator::run_round() {
    const int round = next_round_;
    last_energy_ = {};
    last_selection_.clear();
    last_mid_round_dropouts_.clear();

    std::unordered_map<ClientId, std::size_t> index_of;
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        index_of.emplace(clients_[i].profile.client_id, i);
    }

    // Step 1: selection.
    const auto pool = candidate_pool();
    auto select_rng = make_rng(config_.seed, static_cast<std::uint64_t>(round), RngPurpose::Selection);
    const auto selection = select_top_k(pool, config_.k_per_round, config_.strategy, utility_,
                                        config_.epsilon, select_rng);
    if (selection) {
        last_selection_ = *selection;
    }
    std::vector<ClientId> participants = last_selection_;
    std::sort(participants.begin(), participants.end());

    // Steps 2-3: timed work with phase-by-phase energy charging.
    std::vector<WeightedDelta> deltas;
    double completed_max_s = 0.0;
    double dropped_max_s = 0.0;
    double loss_weighted = 0.0;
    std::int64_t loss_samples = 0;
    std::vector<bool> selected(clients_.size(), false);

    for (const ClientId id : participants) {
        const std::size_t idx = index_of.at(id);
        selected[idx] = true;
        auto& client = clients_[idx];
        const auto& profile = client.profile;
        const auto& shard = data_.shards[idx];
        ++client.times_selected;

        const double capacity = client.battery.capacity_joules();
        const double down_s = transfer_seconds(config_.model_bytes, profile.downlink_mbps);
        const double train_s =
            static_cast<double>(config_.device_samples(shard.size()) * config_.local_epochs) /
            throughput_samples_per_sec(profile);
        const double up_s = transfer_seconds(config_.model_bytes, profile.uplink_mbps);

        const double down_j =
            communication_energy_pct(profile.medium, Direction::Download, down_s / 3600.0) / 100.0 *
            capacity;
        const double train_j = computation_energy(profile.avg_power_watts, train_s);
        const double up_j =
            communication_energy_pct(profile.medium, Direction::Upload, up_s / 3600.0) / 100.0 *
            capacity;

        double elapsed = down_s;
        bool alive = charge(client, down_j, last_energy_.communication);
        if (alive) {
            elapsed += train_s;
            alive = charge(client, train_j, last_energy_.computation);
        }
        if (alive) {
            elapsed += up_s;
            alive = charge(client, up_j, last_energy_.communication);
        }
        if (!alive) {
            last_mid_round_dropouts_.push_back(id);
            dropped_max_s = std::max(dropped_max_s, elapsed);
            continue;
        }

        const auto train_seed = make_rng(config_.seed, static_cast<std::uint64_t>(round),
                                         RngPurpose::Training, static_cast<std::uint64_t>(id))();
        auto result = local_train(model_.weights, shard, config_.learning_rate, config_.local_epochs,
                                  config_.batch_size, train_seed);
        client.stats.sample_count = static_cast<std::int64_t>(shard.size());
        client.stats.sum_sq_loss = result.sum_sq_loss;
        client.stats.last_duration_s = elapsed;
        ++client.stats.rounds_participated;

        completed_max_s = std::max(completed_max_s, elapsed);
        loss_weighted += result.avg_loss * static_cast<double>(shard.size());
        loss_samples += static_cast<std::int64_t>(shard.size());
        deltas.push_back({id, std::move(result.delta), result.samples_used});
    }

    // Step 4: round duration.
    const int completed = static_cast<int>(deltas.size());
    const double raw_duration = completed > 0 ? completed_max_s : dropped_max_s;
    const double duration =
        std::max(config_.min_round_s, std::min(raw_duration, config_.round_deadline_s));

    // Step 5: background drain for everyone not selected.
    auto background_rng =
        make_rng(config_.seed, static_cast<std::uint64_t>(round), RngPurpose::Background);
    const double hours = duration / 3600.0;
    for (std::size_t i = 0; i < clients_.size(); ++i) {
        const bool busy = uniform01(background_rng) < clients_[i].profile.busy_other_prob;
        if (selected[i] || clients_[i].battery.dropped()) {
            continue;
        }
        charge(clients_[i],
               idle_tick_energy(clients_[i].battery, clients_[i].profile, hours, busy),
               last_energy_.background);
    }

    // Step 6: quorum and aggregation.
    const auto required = static_cast<int>(
        std::ceil(config_.report_quorum * static_cast<double>(participants.size())));
    const bool failed = completed == 0 || completed < required;
    if (!failed) {
        const auto aggregate = aggregate_fedavg(std::move(deltas));
        model_ = yogi_server_update(std::move(model_), *aggregate, config_.yogi);
    }

    // Step 7: evaluation and record.
    if (loss_samples > 0) {
        last_train_loss_ = loss_weighted / static_cast<double>(loss_samples);
    }
    const auto eval = evaluate(model_.weights, data_.test_set);
    sim_time_s_ += duration;

    std::vector<std::int64_t> counts;
    counts.reserve(clients_.size());
    double battery_pct_sum = 0.0;
    int dropped = 0;
    for (const auto& c : clients_) {
        counts.push_back(c.times_selected);
        battery_pct_sum += c.battery.remaining_pct();
        dropped += c.battery.dropped() ? 1 : 0;
    }

    RoundRecord record;
    record.round = round;
    record.sim_time_h = sim_time_s_ / 3600.0;
    record.round_duration_s = duration;
    record.accuracy = eval.accuracy;
    record.train_loss = last_train_loss_;
    record.dropouts_cumulative = dropped;
    record.jains_index = jains_index(counts);
    record.mean_battery_pct = battery_pct_sum / static_cast<double>(clients_.size());
    record.participants_completed = completed;
    record.round_failed = failed;

    ++next_round_;
    return record;
}

std::vector<RoundRecord> run_simulation(const SimConfig& config) {
    Simulator sim(config);
    std::vector<RoundRecord> records;
    records.reserve(static_cast<std::size_t>(config.rounds));
    for (int r = 0; r < config.rounds; ++r) {
        records.push_back(sim.run_round());
        if (sim.pool_empty()) {
            break;
        }
    }
    return records;
}

} // namespace eafl
