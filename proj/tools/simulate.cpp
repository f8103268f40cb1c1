// Runs an experiment matrix (strategies x seeds) and writes per-run CSVs plus summary.json.

#include <eafl/reporting.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

void print_summary(const eafl::SummaryReport& report, const std::filesystem::path& out_dir) {
    std::printf("%-8s %-18s %-18s %-18s %s\n", "strategy", "final_accuracy", "final_dropouts",
                "final_jains", "time_to_target_h");
    for (const auto& s : report.strategies) {
        char ttt[64] = "-";
        if (s.time_to_target_h) {
            std::snprintf(ttt, sizeof ttt, "%.3f (%d runs)", s.time_to_target_h->mean,
                          s.runs_reaching_target);
        }
        std::printf("%-8s %.4f +- %-8.4f %7.2f +- %-7.2f %.4f +- %-8.4f %s\n",
                    std::string(eafl::to_string(s.strategy)).c_str(), s.final_accuracy.mean,
                    s.final_accuracy.stddev, s.final_dropouts.mean, s.final_dropouts.stddev,
                    s.final_jains_index.mean, s.final_jains_index.stddev, ttt);
    }
    for (const auto& [kind, ratio] : report.dropout_ratio_vs_eafl) {
        if (ratio) {
            std::printf("dropout ratio %s/eafl: %.3f\n", std::string(eafl::to_string(kind)).c_str(), *ratio);
        } else {
            std::printf("dropout ratio %s/eafl: n/a\n", std::string(eafl::to_string(kind)).c_str());
        }
    }
    std::printf("results written to %s\n", out_dir.string().c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-aware federated learning client-selection simulator"};
    app.name("simulate");

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> strategy;
    std::optional<std::string> seed;
    std::optional<std::string> rounds;
    std::optional<std::string> blend_f;
    bool list_keys = false;

    app.add_option("--config", config_path, "Experiment configuration file (key = value)");
    app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
    app.add_option("--strategy", strategy, "random, oort or eafl (overrides strategies)");
    app.add_option("--seed", seed, "Single seed (overrides seeds)");
    app.add_option("--rounds", rounds, "Number of rounds");
    app.add_option("--f", blend_f, "EAFL blend factor f in [0,1]");
    app.add_flag("--list-keys", list_keys, "Print every accepted configuration key and exit");

    CLI11_PARSE(app, argc, argv);

    if (list_keys) {
        for (const auto& key : eafl::config_keys()) {
            std::cout << key << '\n';
        }
        return 0;
    }
    if (config_path.empty()) {
        std::cerr << "error: --config is required\n";
        return 2;
    }

    try {
        auto spec = eafl::parse_config(config_path);
        const std::pair<const char*, const std::optional<std::string>*> overrides[] = {
            {"output_dir", &out_dir}, {"strategy", &strategy}, {"seed", &seed},
            {"rounds", &rounds},      {"blend_f", &blend_f},
        };
        for (const auto& [key, value] : overrides) {
            if (*value) {
                eafl::apply_override(spec, key, **value);
            }
        }
        const auto report = eafl::run_experiments(spec);
        print_summary(report, spec.output_dir);
    } catch (const eafl::ConfigError& e) {
        std::cerr << "config error (" << config_path << "): " << e.what() << '\n';
        return 2;
    } catch (const eafl::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
