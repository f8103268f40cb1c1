#include <eafl/device_energy.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace eafl {

namespace {

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view text) {
    auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) {
        return {};
    }
    auto end = text.find_last_not_of(" \t\r");
    return std::string(text.substr(begin, end - begin + 1));
}

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

} // namespace

std::string_view to_string(DeviceTier tier) {
    switch (tier) {
    case DeviceTier::HighEnd:
        return "HighEnd";
    case DeviceTier::MidRange:
        return "MidRange";
    case DeviceTier::LowEnd:
        return "LowEnd";
    }
    return "?";
}

std::string_view to_string(Medium medium) {
    return medium == Medium::WiFi ? "WiFi" : "3G";
}

DeviceTier parse_tier(std::string_view text) {
    const auto key = lower(text);
    if (key == "highend" || key == "high_end" || key == "high") {
        return DeviceTier::HighEnd;
    }
    if (key == "midrange" || key == "mid_range" || key == "mid") {
        return DeviceTier::MidRange;
    }
    if (key == "lowend" || key == "low_end" || key == "low") {
        return DeviceTier::LowEnd;
    }
    throw std::invalid_argument("unknown device tier '" + std::string(text) + "'");
}

Medium parse_medium(std::string_view text) {
    const auto key = lower(text);
    if (key == "wifi") {
        return Medium::WiFi;
    }
    if (key == "3g" || key == "threeg") {
        return Medium::ThreeG;
    }
    throw std::invalid_argument("unknown medium '" + std::string(text) + "'");
}

TierSpec tier_spec(DeviceTier tier) {
    switch (tier) {
    case DeviceTier::HighEnd:
        return {6.33, 5.94, 4000.0};
    case DeviceTier::MidRange:
        return {5.44, 4.03, 3450.0};
    case DeviceTier::LowEnd:
        return {2.98, 3.55, 3000.0};
    }
    throw std::invalid_argument("invalid device tier");
}

LinkSpec default_link(Medium medium) {
    // Typical sustained rates for the two media.
    return medium == Medium::WiFi ? LinkSpec{20.0, 8.0} : LinkSpec{3.0, 1.0};
}

DeviceProfile DeviceProfile::for_tier(ClientId id, DeviceTier tier, Medium medium) {
    const auto spec = tier_spec(tier);
    const auto link = default_link(medium);
    DeviceProfile p;
    p.client_id = id;
    p.tier = tier;
    p.avg_power_watts = spec.avg_power_watts;
    p.perf_per_watt = spec.perf_per_watt;
    p.battery_capacity_mah = spec.battery_capacity_mah;
    p.medium = medium;
    p.downlink_mbps = link.downlink_mbps;
    p.uplink_mbps = link.uplink_mbps;
    return p;
}

void DeviceProfile::validate() const {
    require(client_id >= 0, "client_id must be >= 0");
    require(avg_power_watts > 0.0, "avg_power_watts must be > 0");
    require(perf_per_watt > 0.0, "perf_per_watt must be > 0");
    require(battery_capacity_mah > 0.0, "battery_capacity_mah must be > 0");
    require(battery_voltage > 0.0, "battery_voltage must be > 0");
    require(downlink_mbps > 0.0, "downlink_mbps must be > 0");
    require(uplink_mbps > 0.0, "uplink_mbps must be > 0");
    require(idle_drain_pct_per_hour >= 0.0, "idle_drain_pct_per_hour must be >= 0");
    require(busy_other_prob >= 0.0 && busy_other_prob <= 1.0, "busy_other_prob must be in [0,1]");
}

BatteryState::BatteryState(double capacity_joules, double remaining_joules)
    : capacity_(capacity_joules), remaining_(remaining_joules), dropped_(remaining_joules <= 0.0) {
    require(capacity_joules > 0.0, "battery capacity must be > 0");
    require(remaining_joules >= 0.0 && remaining_joules <= capacity_joules,
            "remaining charge must lie in [0, capacity]");
}

BatteryState BatteryState::at_percent(double capacity_joules, double percent) {
    require(percent >= 0.0 && percent <= 100.0, "battery percent must lie in [0, 100]");
    return BatteryState(capacity_joules, capacity_joules * percent / 100.0);
}

double BatteryState::withdraw(double joules) {
    require(joules >= 0.0, "cannot drain a negative amount of energy");
    if (dropped_) {
        return 0.0;
    }
    if (joules >= remaining_) {
        const double taken = remaining_;
        remaining_ = 0.0;
        dropped_ = true;
        return taken;
    }
    remaining_ -= joules;
    return joules;
}

CommEnergyLine comm_energy_line(Medium medium, Direction direction) {
    if (medium == Medium::WiFi) {
        return direction == Direction::Download ? CommEnergyLine{18.09, 0.17}
                                                : CommEnergyLine{21.24, -2.68};
    }
    return direction == Direction::Download ? CommEnergyLine{20.59, -1.09}
                                            : CommEnergyLine{15.31, 2.67};
}

double battery_capacity_joules(double capacity_mah, double voltage) {
    require(capacity_mah > 0.0, "battery capacity (mAh) must be > 0");
    require(voltage > 0.0, "battery voltage must be > 0");
    return capacity_mah / 1000.0 * voltage * 3600.0;
}

double computation_energy(double power_watts, double duration_s) {
    require(power_watts > 0.0, "power must be > 0");
    require(duration_s >= 0.0, "duration must be >= 0");
    return power_watts * duration_s;
}

double communication_energy_pct(Medium medium, Direction direction, double hours) {
    require(hours >= 0.0, "transfer duration must be >= 0");
    return std::max(0.0, comm_energy_line(medium, direction).at(hours));
}

BatteryState drain(BatteryState battery, double joules) {
    battery.withdraw(joules);
    return battery;
}

double idle_tick_energy(const BatteryState& battery, const DeviceProfile& profile, double hours,
                        bool busy) {
    require(hours >= 0.0, "idle duration must be >= 0");
    if (busy) {
        return computation_energy(profile.avg_power_watts, hours * 3600.0);
    }
    return battery.capacity_joules() * profile.idle_drain_pct_per_hour * hours / 100.0;
}

BatteryState idle_tick(BatteryState battery, const DeviceProfile& profile, double hours,
                       bool busy) {
    battery.withdraw(idle_tick_energy(battery, profile, hours, busy));
    return battery;
}

double throughput_samples_per_sec(const DeviceProfile& profile) {
    return profile.perf_per_watt * profile.avg_power_watts;
}

double profile_capacity_joules(const DeviceProfile& profile) {
    return battery_capacity_joules(profile.battery_capacity_mah, profile.battery_voltage);
}

std::vector<FleetEntry> read_fleet_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw std::runtime_error("fleet csv line " + std::to_string(line_no) + ": " + why);
    };

    if (!std::getline(in, line)) {
        fail("missing header");
    }
    ++line_no;
    if (trim(line) != "client_id,tier,battery_pct,medium") {
        fail("expected header 'client_id,tier,battery_pct,medium'");
    }

    std::vector<FleetEntry> fleet;
    std::set<ClientId> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            cells.push_back(trim(cell));
        }
        if (cells.size() != 4) {
            fail("expected 4 columns, found " + std::to_string(cells.size()));
        }

        ClientId id = -1;
        auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), id);
        if (ec != std::errc{} || ptr != cells[0].data() + cells[0].size() || id < 0) {
            fail("invalid client_id '" + cells[0] + "'");
        }
        if (!seen.insert(id).second) {
            fail("duplicate client_id " + cells[0]);
        }

        double pct = 0.0;
        try {
            std::size_t used = 0;
            pct = std::stod(cells[2], &used);
            if (used != cells[2].size()) {
                fail("invalid battery_pct '" + cells[2] + "'");
            }
        } catch (const std::logic_error&) {
            fail("invalid battery_pct '" + cells[2] + "'");
        }
        if (!(pct >= 0.0 && pct <= 100.0)) {
            fail("battery_pct out of [0,100]");
        }

        try {
            FleetEntry entry{DeviceProfile::for_tier(id, parse_tier(cells[1]), parse_medium(cells[3])),
                             pct};
            fleet.push_back(entry);
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }
    return fleet;
}

std::vector<FleetEntry> load_fleet_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open fleet csv '" + path + "'");
    }
    return read_fleet_csv(in);
}

} // namespace eafl
