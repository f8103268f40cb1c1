#include <eafl/reporting.hpp>

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

namespace eafl {

ConfigError::ConfigError(const std::string& message, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

ConfigRangeError::ConfigRangeError(const std::string& message, std::size_t line, std::string key)
    : ConfigError(message, line), key_(std::move(key)) {}

namespace {

std::string trim(std::string_view text) {
    const auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = text.find_last_not_of(" \t\r");
    return std::string(text.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> items;
    std::string current;
    for (const char c : text) {
        if (c == ',') {
            items.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!trim(current).empty() || !items.empty()) {
        items.push_back(trim(current));
    }
    return items;
}

// Converts one value, reporting syntax problems against `key` and `line`.
struct ValueReader {
    std::string key;
    std::string value;
    std::size_t line;

    [[noreturn]] void bad(const std::string& expected) const {
        throw ConfigSyntaxError("value '" + value + "' for " + key + " is not " + expected, line);
    }

    [[noreturn]] void out_of_range(const std::string& rule) const {
        throw ConfigRangeError(key + " = " + value + " is out of range: " + rule, line, key);
    }

    [[nodiscard]] double real(std::string_view text) const {
        const std::string t = trim(text);
        if (t.empty()) {
            bad("a number");
        }
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(t.c_str(), &end);
        if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
            bad("a number");
        }
        return v;
    }

    [[nodiscard]] double real() const { return real(value); }

    [[nodiscard]] long long integer() const {
        const std::string t = trim(value);
        if (t.empty()) {
            bad("an integer");
        }
        char* end = nullptr;
        errno = 0;
        const long long v = std::strtoll(t.c_str(), &end, 10);
        if (end != t.c_str() + t.size() || errno == ERANGE) {
            bad("an integer");
        }
        return v;
    }

    [[nodiscard]] bool boolean() const {
        const std::string t = trim(value);
        if (t == "true" || t == "1" || t == "yes") {
            return true;
        }
        if (t == "false" || t == "0" || t == "no") {
            return false;
        }
        bad("a boolean");
    }

    [[nodiscard]] int count(long long lo) const {
        const auto v = integer();
        if (v < lo || v > 100'000'000) {
            out_of_range("expected an integer >= " + std::to_string(lo));
        }
        return static_cast<int>(v);
    }

    [[nodiscard]] double at_least(double lo, bool inclusive) const {
        const double v = real();
        if (inclusive ? v < lo : v <= lo) {
            out_of_range(std::string("expected a value ") + (inclusive ? ">= " : "> ") +
                         std::to_string(lo));
        }
        return v;
    }

    [[nodiscard]] double between(double lo, double hi, bool hi_inclusive = true,
                                 bool lo_inclusive = true) const {
        const double v = real();
        const bool ok = (lo_inclusive ? v >= lo : v > lo) && (hi_inclusive ? v <= hi : v < hi);
        if (!ok) {
            out_of_range("expected a value in " + std::string(lo_inclusive ? "[" : "(") +
                         std::to_string(lo) + ", " + std::to_string(hi) + (hi_inclusive ? "]" : ")"));
        }
        return v;
    }
};

using Setter = std::function<void(ExperimentSpec&, const ValueReader&)>;

struct KeyInfo {
    std::string section;
    Setter set;
};

std::vector<StrategyKind> strategy_list(const ValueReader& r) {
    std::vector<StrategyKind> out;
    for (const auto& item : split_list(r.value)) {
        if (item.empty()) {
            throw ConfigValidationError(r.key + " contains an empty entry", r.line);
        }
        try {
            out.push_back(parse_strategy(item));
        } catch (const std::invalid_argument& e) {
            throw ConfigSyntaxError(e.what(), r.line);
        }
    }
    if (out.empty()) {
        throw ConfigValidationError(r.key + " must name at least one strategy", r.line);
    }
    return out;
}

std::vector<std::uint64_t> seed_list(const ValueReader& r) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(r.value)) {
        ValueReader one{r.key, item, r.line};
        const auto v = one.integer();
        if (v < 0) {
            one.out_of_range("seeds must be >= 0");
        }
        out.push_back(static_cast<std::uint64_t>(v));
    }
    if (out.empty()) {
        throw ConfigValidationError(r.key + " must list at least one seed", r.line);
    }
    return out;
}

const std::map<std::string, KeyInfo>& key_table() {
    static const std::map<std::string, KeyInfo> table = [] {
        std::map<std::string, KeyInfo> t;
        auto add = [&](const std::string& section, const std::string& key, Setter set) {
            t.emplace(key, KeyInfo{section, std::move(set)});
        };

        add("experiment", "strategies", [](auto& s, const auto& r) { s.strategies = strategy_list(r); });
        add("experiment", "strategy", [](auto& s, const auto& r) {
            s.strategies = strategy_list(r);
            if (s.strategies.size() != 1) {
                throw ConfigValidationError("strategy takes exactly one name", r.line);
            }
        });
        add("experiment", "seeds", [](auto& s, const auto& r) { s.seeds = seed_list(r); });
        add("experiment", "seed", [](auto& s, const auto& r) {
            s.seeds = seed_list(r);
            if (s.seeds.size() != 1) {
                throw ConfigValidationError("seed takes exactly one value", r.line);
            }
        });
        add("experiment", "output_dir", [](auto& s, const auto& r) {
            if (trim(r.value).empty()) {
                throw ConfigValidationError("output_dir must not be empty", r.line);
            }
            s.output_dir = trim(r.value);
        });
        add("experiment", "target_accuracy",
            [](auto& s, const auto& r) { s.target_accuracy = r.between(0.0, 1.0); });

        add("simulation", "n_clients", [](auto& s, const auto& r) { s.base.n_clients = r.count(1); });
        add("simulation", "rounds", [](auto& s, const auto& r) { s.base.rounds = r.count(1); });
        add("simulation", "k_per_round", [](auto& s, const auto& r) { s.base.k_per_round = r.count(1); });
        add("simulation", "round_deadline_s",
            [](auto& s, const auto& r) { s.base.round_deadline_s = r.at_least(0.0, false); });
        add("simulation", "report_quorum",
            [](auto& s, const auto& r) { s.base.report_quorum = r.between(0.0, 1.0, true, false); });
        add("simulation", "min_round_s",
            [](auto& s, const auto& r) { s.base.min_round_s = r.at_least(0.0, false); });
        add("simulation", "model_bytes", [](auto& s, const auto& r) {
            const auto v = r.integer();
            if (v < 0) {
                r.out_of_range("expected an integer >= 0");
            }
            s.base.model_bytes = v;
        });
        add("simulation", "work_per_sample",
            [](auto& s, const auto& r) { s.base.work_per_sample = r.at_least(0.0, false); });
        add("simulation", "fleet_csv", [](auto& s, const auto& r) { s.base.fleet_csv = trim(r.value); });

        add("energy", "battery_constrained",
            [](auto& s, const auto& r) { s.base.battery_constrained = r.boolean(); });
        add("energy", "battery_voltage",
            [](auto& s, const auto& r) { s.base.battery_voltage = r.at_least(0.0, false); });
        add("energy", "idle_drain_pct_per_hour",
            [](auto& s, const auto& r) { s.base.idle_drain_pct_per_hour = r.at_least(0.0, true); });
        add("energy", "busy_other_prob",
            [](auto& s, const auto& r) { s.base.busy_other_prob = r.between(0.0, 1.0); });
        add("energy", "initial_battery_min_pct",
            [](auto& s, const auto& r) { s.base.initial_battery_min_pct = r.between(0.0, 100.0); });
        add("energy", "initial_battery_max_pct",
            [](auto& s, const auto& r) { s.base.initial_battery_max_pct = r.between(0.0, 100.0); });
        add("energy", "wifi_fraction",
            [](auto& s, const auto& r) { s.base.wifi_fraction = r.between(0.0, 1.0); });
        add("energy", "tier_mix", [](auto& s, const auto& r) {
            const auto items = split_list(r.value);
            if (items.size() != 3) {
                throw ConfigSyntaxError("tier_mix needs three fractions (high, mid, low)", r.line);
            }
            for (std::size_t i = 0; i < 3; ++i) {
                const double v = r.real(items[i]);
                if (v < 0.0 || v > 1.0) {
                    r.out_of_range("each fraction must lie in [0, 1]");
                }
                s.base.tier_mix[i] = v;
            }
        });

        add("selection", "blend_f", [](auto& s, const auto& r) { s.base.blend_f = r.between(0.0, 1.0); });
        add("selection", "epsilon", [](auto& s, const auto& r) { s.base.epsilon = r.between(0.0, 1.0); });
        add("selection", "straggler_alpha",
            [](auto& s, const auto& r) { s.base.straggler_alpha = r.at_least(0.0, true); });

        add("task", "num_labels", [](auto& s, const auto& r) { s.base.task.num_labels = r.count(2); });
        add("task", "labels_per_client",
            [](auto& s, const auto& r) { s.base.task.labels_per_client = r.count(1); });
        add("task", "feature_dim", [](auto& s, const auto& r) { s.base.task.feature_dim = r.count(1); });
        add("task", "samples_per_client",
            [](auto& s, const auto& r) { s.base.task.samples_per_client = r.count(1); });
        add("task", "test_samples_per_label",
            [](auto& s, const auto& r) { s.base.task.test_samples_per_label = r.count(1); });
        add("task", "label_noise",
            [](auto& s, const auto& r) { s.base.task.label_noise = r.between(0.0, 1.0, false); });
        add("task", "lattice_scale",
            [](auto& s, const auto& r) { s.base.task.lattice_scale = r.at_least(0.0, false); });

        add("training", "learning_rate",
            [](auto& s, const auto& r) { s.base.learning_rate = r.at_least(0.0, false); });
        add("training", "batch_size", [](auto& s, const auto& r) { s.base.batch_size = r.count(1); });
        add("training", "local_epochs", [](auto& s, const auto& r) { s.base.local_epochs = r.count(1); });

        add("server", "yogi_eta", [](auto& s, const auto& r) { s.base.yogi.eta = r.at_least(0.0, false); });
        add("server", "yogi_beta1",
            [](auto& s, const auto& r) { s.base.yogi.beta1 = r.between(0.0, 1.0, false); });
        add("server", "yogi_beta2",
            [](auto& s, const auto& r) { s.base.yogi.beta2 = r.between(0.0, 1.0); });
        add("server", "yogi_tau", [](auto& s, const auto& r) { s.base.yogi.tau = r.at_least(0.0, false); });
        return t;
    }();
    return table;
}

void assign(ExperimentSpec& spec, const std::string& section, const std::string& key,
            const std::string& value, std::size_t line) {
    const auto& table = key_table();
    const auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigUnknownKeyError("unknown key '" + key + "'", line);
    }
    if (!section.empty() && it->second.section != section) {
        throw ConfigUnknownKeyError("key '" + key + "' does not belong in section [" + section +
                                        "] (it lives in [" + it->second.section + "])",
                                    line);
    }
    it->second.set(spec, ValueReader{key, value, line});
}

void finalize(ExperimentSpec& spec) {
    spec.base.strategy = spec.strategies.front();
    spec.base.seed = spec.seeds.front();
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigValidationError(e.what(), 0);
    }
}

} // namespace

void ExperimentSpec::validate() const {
    if (strategies.empty()) {
        throw std::invalid_argument("at least one strategy is required");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("at least one seed is required");
    }
    if (output_dir.empty()) {
        throw std::invalid_argument("output_dir must not be empty");
    }
    if (!(target_accuracy >= 0.0 && target_accuracy <= 1.0)) {
        throw std::invalid_argument("target_accuracy must lie in [0,1]");
    }
    base.validate();
}

SimConfig ExperimentSpec::run_config(StrategyKind strategy, std::uint64_t seed) const {
    SimConfig config = base;
    config.strategy = strategy;
    config.seed = seed;
    return config;
}

ExperimentSpec parse_config_text(std::string_view text) {
    ExperimentSpec spec;
    std::string section;
    std::map<std::string, std::size_t> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        auto cut = raw.find_first_of("#;");
        const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigSyntaxError("malformed section header '" + line + "'", line_no);
            }
            section = trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> sections{"experiment", "simulation", "energy",
                                                           "selection",  "task",       "training",
                                                           "server"};
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                throw ConfigUnknownKeyError("unknown section [" + section + "]", line_no);
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigSyntaxError("expected 'key = value', found '" + line + "'", line_no);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigSyntaxError("missing key before '='", line_no);
        }
        if (const auto prev = seen.find(key); prev != seen.end()) {
            throw ConfigSyntaxError("duplicate key '" + key + "' (first set on line " +
                                        std::to_string(prev->second) + ")",
                                    line_no);
        }
        seen.emplace(key, line_no);
        assign(spec, section, key, value, line_no);
    }
    finalize(spec);
    return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigFileError("cannot open config file '" + path.string() + "'", 0);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

void apply_override(ExperimentSpec& spec, std::string_view key, std::string_view value) {
    assign(spec, "", std::string(key), std::string(value), 0);
    finalize(spec);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, info] : key_table()) {
        keys.push_back(info.section + "." + key);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

namespace {

std::string fixed6(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

} // namespace

double csv_rounded(double value) {
    return std::strtod(fixed6(value).c_str(), nullptr);
}

void write_csv(std::span<const RoundRecord> records, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.round << ',' << fixed6(r.sim_time_h) << ',' << fixed6(r.round_duration_s) << ','
            << fixed6(r.accuracy) << ',' << fixed6(r.train_loss) << ',' << r.dropouts_cumulative
            << ',' << fixed6(r.jains_index) << ',' << fixed6(r.mean_battery_pct) << ','
            << r.participants_completed << ',' << (r.round_failed ? "true" : "false") << '\n';
    }
}

void emit_csv(std::span<const RoundRecord> records, const std::filesystem::path& path) {
    if (records.empty()) {
        throw std::invalid_argument("emit_csv needs at least one record");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
    }
    write_csv(records, out);
    out.flush();
    if (!out) {
        throw IoError("failed writing '" + path.string() + "': " + std::strerror(errno));
    }
}

SampleStat sample_stat(std::span<const double> values) {
    SampleStat stat;
    stat.count = static_cast<int>(values.size());
    if (values.empty()) {
        return stat;
    }
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    stat.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) {
            ss += (v - stat.mean) * (v - stat.mean);
        }
        stat.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return stat;
}

std::optional<double> time_to_target(std::span<const RoundRecord> records, double target) {
    for (const auto& r : records) {
        if (csv_rounded(r.accuracy) >= target) {
            return csv_rounded(r.sim_time_h);
        }
    }
    return std::nullopt;
}

RunOutcome summarize_run(std::span<const RoundRecord> records, double target) {
    if (records.empty()) {
        throw std::invalid_argument("cannot summarize an empty run");
    }
    const auto& last = records.back();
    RunOutcome outcome;
    outcome.final_accuracy = csv_rounded(last.accuracy);
    outcome.final_dropouts = static_cast<double>(last.dropouts_cumulative);
    outcome.final_jains_index = csv_rounded(last.jains_index);
    outcome.time_to_target_h = time_to_target(records, target);
    return outcome;
}

const StrategySummary* SummaryReport::find(StrategyKind kind) const {
    for (const auto& s : strategies) {
        if (s.strategy == kind) {
            return &s;
        }
    }
    return nullptr;
}

SummaryReport summarize(std::vector<RunOutcome> runs, double target_accuracy) {
    SummaryReport report;
    report.target_accuracy = target_accuracy;
    std::vector<StrategyKind> order;
    for (const auto& run : runs) {
        if (std::find(order.begin(), order.end(), run.strategy) == order.end()) {
            order.push_back(run.strategy);
        }
    }
    for (const auto kind : order) {
        std::vector<double> acc, drops, jains, ttt;
        for (const auto& run : runs) {
            if (run.strategy != kind) {
                continue;
            }
            acc.push_back(run.final_accuracy);
            drops.push_back(run.final_dropouts);
            jains.push_back(run.final_jains_index);
            if (run.time_to_target_h) {
                ttt.push_back(*run.time_to_target_h);
            }
        }
        StrategySummary summary;
        summary.strategy = kind;
        summary.final_accuracy = sample_stat(acc);
        summary.final_dropouts = sample_stat(drops);
        summary.final_jains_index = sample_stat(jains);
        summary.runs_reaching_target = static_cast<int>(ttt.size());
        if (!ttt.empty()) {
            summary.time_to_target_h = sample_stat(ttt);
        }
        report.strategies.push_back(summary);
    }

    if (const auto* eafl = report.find(StrategyKind::Eafl)) {
        for (const auto& s : report.strategies) {
            if (s.strategy == StrategyKind::Eafl) {
                continue;
            }
            std::optional<double> ratio;
            if (s.final_dropouts.mean > 0.0 && eafl->final_dropouts.mean > 0.0) {
                ratio = s.final_dropouts.mean / eafl->final_dropouts.mean;
            }
            report.dropout_ratio_vs_eafl.emplace_back(s.strategy, ratio);
        }
    }
    report.runs = std::move(runs);
    return report;
}

std::string summary_json(const SummaryReport& report) {
    using nlohmann::ordered_json;
    auto stat_json = [](const SampleStat& s) {
        return ordered_json{{"mean", s.mean}, {"std", s.stddev}, {"n", s.count}};
    };

    ordered_json doc;
    doc["target_accuracy"] = report.target_accuracy;
    ordered_json strategies = ordered_json::object();
    for (const auto& s : report.strategies) {
        ordered_json entry;
        entry["final_accuracy"] = stat_json(s.final_accuracy);
        entry["final_dropouts"] = stat_json(s.final_dropouts);
        entry["final_jains_index"] = stat_json(s.final_jains_index);
        entry["time_to_target_h"] =
            s.time_to_target_h ? stat_json(*s.time_to_target_h) : ordered_json(nullptr);
        entry["runs_reaching_target"] = s.runs_reaching_target;
        strategies[std::string(to_string(s.strategy))] = entry;
    }
    doc["strategies"] = strategies;

    ordered_json ratios = ordered_json::object();
    for (const auto& [kind, ratio] : report.dropout_ratio_vs_eafl) {
        ratios[std::string(to_string(kind))] = ratio ? ordered_json(*ratio) : ordered_json(nullptr);
    }
    doc["dropout_ratio_vs_eafl"] = ratios;

    ordered_json runs = ordered_json::array();
    for (const auto& run : report.runs) {
        runs.push_back({{"strategy", std::string(to_string(run.strategy))},
                        {"seed", run.seed},
                        {"csv", run.csv_path.filename().string()},
                        {"final_accuracy", run.final_accuracy},
                        {"final_dropouts", run.final_dropouts},
                        {"final_jains_index", run.final_jains_index},
                        {"time_to_target_h", run.time_to_target_h ? ordered_json(*run.time_to_target_h)
                                                                  : ordered_json(nullptr)}});
    }
    doc["runs"] = runs;
    return doc.dump(2) + "\n";
}

std::string csv_file_name(StrategyKind strategy, std::uint64_t seed) {
    return std::string(to_string(strategy)) + "_seed" + std::to_string(seed) + ".csv";
}

namespace {

void ensure_writable(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
    const auto probe = dir / ".write_probe";
    {
        std::ofstream out(probe, std::ios::trunc);
        if (!out || !(out << "ok")) {
            throw IoError("output directory '" + dir.string() + "' is not writable: " +
                          std::strerror(errno));
        }
    }
    std::filesystem::remove(probe, ec);
}

} // namespace

SummaryReport run_experiments(const ExperimentSpec& spec) {
    spec.validate();
    ensure_writable(spec.output_dir);

    struct Job {
        StrategyKind strategy;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto strategy : spec.strategies) {
        for (const auto seed : spec.seeds) {
            jobs.push_back({strategy, seed});
        }
    }

    std::vector<std::future<RunOutcome>> futures;
    futures.reserve(jobs.size());
    for (const auto& job : jobs) {
        futures.push_back(std::async(std::launch::async, [&spec, job] {
            const auto records = run_simulation(spec.run_config(job.strategy, job.seed));
            auto outcome = summarize_run(records, spec.target_accuracy);
            outcome.strategy = job.strategy;
            outcome.seed = job.seed;
            outcome.csv_path = spec.output_dir / csv_file_name(job.strategy, job.seed);
            emit_csv(records, outcome.csv_path);
            return outcome;
        }));
    }

    std::vector<RunOutcome> outcomes;
    outcomes.reserve(jobs.size());
    for (auto& f : futures) {
        outcomes.push_back(f.get());
    }

    auto report = summarize(std::move(outcomes), spec.target_accuracy);
    const auto summary_path = spec.output_dir / "summary.json";
    std::ofstream out(summary_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + summary_path.string() + "' for writing: " +
                      std::strerror(errno));
    }
    out << summary_json(report);
    if (!out) {
        throw IoError("failed writing '" + summary_path.string() + "'");
    }
    return report;
}

} // namespace eafl
