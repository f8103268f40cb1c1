#pragma once

/// @file device_energy.hpp
/// @brief Device tiers, battery ledgers and the computation/communication energy models.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace eafl {

using ClientId = std::int32_t;

enum class DeviceTier { HighEnd, MidRange, LowEnd };
enum class Medium { WiFi, ThreeG };
enum class Direction { Download, Upload };

[[nodiscard]] std::string_view to_string(DeviceTier tier);
[[nodiscard]] std::string_view to_string(Medium medium);
/// Accepts "HighEnd"/"high_end"/"high" (and the mid/low equivalents), case-insensitive.
[[nodiscard]] DeviceTier parse_tier(std::string_view text);
/// Accepts "wifi" and "3g"/"threeg", case-insensitive.
[[nodiscard]] Medium parse_medium(std::string_view text);

/// Measured hardware figures of one representative handset per tier.
struct TierSpec {
    double avg_power_watts;
    double perf_per_watt;
    double battery_capacity_mah;
};

[[nodiscard]] TierSpec tier_spec(DeviceTier tier);

/// Default link rates for a medium, in Mbit/s.
struct LinkSpec {
    double downlink_mbps;
    double uplink_mbps;
};

[[nodiscard]] LinkSpec default_link(Medium medium);

inline constexpr double kDefaultBatteryVoltage = 3.85;
inline constexpr double kDefaultIdleDrainPctPerHour = 0.5;
inline constexpr double kDefaultBusyOtherProb = 0.1;

struct DeviceProfile {
    ClientId client_id = 0;
    DeviceTier tier = DeviceTier::MidRange;
    double avg_power_watts = 0.0;
    double perf_per_watt = 0.0;
    double battery_capacity_mah = 0.0;
    double battery_voltage = kDefaultBatteryVoltage;
    Medium medium = Medium::WiFi;
    double downlink_mbps = 0.0;
    double uplink_mbps = 0.0;
    double idle_drain_pct_per_hour = kDefaultIdleDrainPctPerHour;
    double busy_other_prob = kDefaultBusyOtherProb;

    /// Profile with the tier's hardware figures and the medium's default link rates.
    [[nodiscard]] static DeviceProfile for_tier(ClientId id, DeviceTier tier, Medium medium);

    /// Throws std::invalid_argument if any field is out of range.
    void validate() const;
};

/// Joule ledger of one battery. `dropped` latches once the ledger reaches zero.
class BatteryState {
public:
    BatteryState() = default;
    /// Battery holding `remaining_joules` out of `capacity_joules`. A zero initial charge
    /// produces an already-dropped battery.
    BatteryState(double capacity_joules, double remaining_joules);

    [[nodiscard]] static BatteryState at_percent(double capacity_joules, double percent);

    [[nodiscard]] double capacity_joules() const { return capacity_; }
    [[nodiscard]] double remaining_joules() const { return remaining_; }
    [[nodiscard]] double remaining_pct() const { return 100.0 * remaining_ / capacity_; }
    [[nodiscard]] bool dropped() const { return dropped_; }

    /// Removes up to `joules` and returns the amount actually withdrawn.
    double withdraw(double joules);

private:
    double capacity_ = 1.0;
    double remaining_ = 1.0;
    bool dropped_ = false;
};

/// Battery-percent consumed as a linear function of transfer duration in hours.
struct CommEnergyLine {
    double slope;
    double intercept;

    [[nodiscard]] double at(double hours) const { return slope * hours + intercept; }
};

[[nodiscard]] CommEnergyLine comm_energy_line(Medium medium, Direction direction);

[[nodiscard]] double battery_capacity_joules(double capacity_mah, double voltage);
[[nodiscard]] double computation_energy(double power_watts, double duration_s);
/// Battery-% for a transfer of `hours`, clamped at zero from below.
[[nodiscard]] double communication_energy_pct(Medium medium, Direction direction, double hours);
[[nodiscard]] BatteryState drain(BatteryState battery, double joules);
[[nodiscard]] BatteryState idle_tick(BatteryState battery, const DeviceProfile& profile,
                                     double hours, bool busy);
/// Energy idle_tick would charge for the same arguments, before flooring at empty.
[[nodiscard]] double idle_tick_energy(const BatteryState& battery, const DeviceProfile& profile,
                                      double hours, bool busy);
[[nodiscard]] double throughput_samples_per_sec(const DeviceProfile& profile);

[[nodiscard]] double profile_capacity_joules(const DeviceProfile& profile);

/// One row of a fleet-profile CSV.
struct FleetEntry {
    DeviceProfile profile;
    double battery_pct = 100.0;
};

/// Reads `client_id,tier,battery_pct,medium` rows. Unknown tiers or media, duplicate ids and
/// malformed numbers raise std::runtime_error naming the line.
[[nodiscard]] std::vector<FleetEntry> read_fleet_csv(std::istream& in);
[[nodiscard]] std::vector<FleetEntry> load_fleet_csv(const std::string& path);

} // namespace eafl
