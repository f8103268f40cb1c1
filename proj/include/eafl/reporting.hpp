#pragma once

/// @file reporting.hpp
/// @brief Experiment configuration, multi-strategy/multi-seed execution and metric export.

#include <eafl/simulator.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eafl {

struct ExperimentSpec {
    SimConfig base;
    std::vector<StrategyKind> strategies{StrategyKind::Random, StrategyKind::Oort, StrategyKind::Eafl};
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path output_dir{"results"};
    double target_accuracy = 0.6;

    void validate() const;
    /// Base config specialised for one (strategy, seed) run.
    [[nodiscard]] SimConfig run_config(StrategyKind strategy, std::uint64_t seed) const;
};

/// Base of every configuration failure. `line()` is 0 when no source line applies.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::size_t line);
    [[nodiscard]] std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ConfigFileError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ConfigSyntaxError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class ConfigUnknownKeyError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A value that parsed but lies outside the key's admissible range.
class ConfigRangeError : public ConfigError {
public:
    ConfigRangeError(const std::string& message, std::size_t line, std::string key);
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Cross-field constraint failures (tier mix sum, empty lists, ...).
class ConfigValidationError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` text with optional `[section]` headers. Keys outside any section may
/// belong to any section; keys inside a section must belong to it. `#` and `;` start comments.
[[nodiscard]] ExperimentSpec parse_config_text(std::string_view text);
[[nodiscard]] ExperimentSpec parse_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment as if it appeared in the file (line 0), then revalidates.
void apply_override(ExperimentSpec& spec, std::string_view key, std::string_view value);

/// Every accepted key, as `section.key`.
[[nodiscard]] std::vector<std::string> config_keys();

inline constexpr std::string_view kCsvHeader =
    "round,sim_time_h,round_duration_s,accuracy,train_loss,dropouts_cum,jains_index,"
    "mean_battery_pct,participants_completed,round_failed";

void write_csv(std::span<const RoundRecord> records, std::ostream& out);
void emit_csv(std::span<const RoundRecord> records, const std::filesystem::path& path);

/// Value as it reads back from the CSV (six decimals).
[[nodiscard]] double csv_rounded(double value);

struct SampleStat {
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

/// Mean and sample standard deviation (zero for a single value).
[[nodiscard]] SampleStat sample_stat(std::span<const double> values);

struct RunOutcome {
    StrategyKind strategy = StrategyKind::Random;
    std::uint64_t seed = 0;
    std::filesystem::path csv_path;
    double final_accuracy = 0.0;
    double final_dropouts = 0.0;
    double final_jains_index = 0.0;
    std::optional<double> time_to_target_h;
};

struct StrategySummary {
    StrategyKind strategy = StrategyKind::Random;
    SampleStat final_accuracy;
    SampleStat final_dropouts;
    SampleStat final_jains_index;
    /// Over the runs that reached the target; absent when none did.
    std::optional<SampleStat> time_to_target_h;
    int runs_reaching_target = 0;
};

struct SummaryReport {
    double target_accuracy = 0.0;
    std::vector<RunOutcome> runs;
    std::vector<StrategySummary> strategies;
    /// Mean baseline dropouts over mean EAFL dropouts, keyed by baseline; absent unless both > 0.
    std::vector<std::pair<StrategyKind, std::optional<double>>> dropout_ratio_vs_eafl;

    [[nodiscard]] const StrategySummary* find(StrategyKind kind) const;
};

/// First simulated hour at which accuracy reaches `target`.
[[nodiscard]] std::optional<double> time_to_target(std::span<const RoundRecord> records,
                                                   double target);

[[nodiscard]] RunOutcome summarize_run(std::span<const RoundRecord> records, double target);
[[nodiscard]] SummaryReport summarize(std::vector<RunOutcome> runs, double target_accuracy);

[[nodiscard]] std::string summary_json(const SummaryReport& report);

[[nodiscard]] std::string csv_file_name(StrategyKind strategy, std::uint64_t seed);

/// Runs every (strategy, seed) pair, writes one CSV each plus summary.json into output_dir.
/// Throws IoError before simulating anything if output_dir cannot be written.
[[nodiscard]] SummaryReport run_experiments(const ExperimentSpec& spec);

} // namespace eafl
