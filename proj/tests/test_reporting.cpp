#include <eafl/reporting.hpp>

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace eafl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("eafl_report_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        out.push_back(cur);
    }
    return out;
}

const char* kSmallRun = R"(
[experiment]
strategies = random, oort, eafl
seeds = 1, 2
target_accuracy = 0.3
[simulation]
n_clients = 20
rounds = 15
k_per_round = 4
[energy]
initial_battery_min_pct = 1
initial_battery_max_pct = 6
[task]
num_labels = 6
labels_per_client = 2
feature_dim = 5
samples_per_client = 20
test_samples_per_label = 10
)";

} // namespace

TEST_SUITE("cli-reporting") {

TEST_CASE("minimal config keeps defaults") {
    const auto spec = parse_config_text("strategy = eafl\n");
    REQUIRE(spec.strategies.size() == 1);
    CHECK(spec.strategies[0] == StrategyKind::Eafl);
    CHECK(spec.base.k_per_round == 10);
    CHECK(spec.base.blend_f == 0.25);
    CHECK(spec.base.rounds == 500);
    CHECK(spec.base.epsilon == 0.1);
    CHECK(spec.base.learning_rate == 0.05);
    CHECK(spec.base.batch_size == 20);
    CHECK(spec.base.task.num_labels == 35);
    CHECK(spec.base.task.labels_per_client == 4);
}

TEST_CASE("sections and comments") {
    const auto spec = parse_config_text(
        "# header\n[selection]\nblend_f = 0.6 ; inline\nepsilon=0\n[server]\nyogi_eta = 0.02\n"
        "[energy]\ntier_mix = 0.2, 0.3, 0.5\n");
    CHECK(spec.base.blend_f == 0.6);
    CHECK(spec.base.epsilon == 0.0);
    CHECK(spec.base.yogi.eta == 0.02);
    CHECK(spec.base.tier_mix[2] == 0.5);
}

TEST_CASE("config errors are distinct and carry lines") {
    try {
        (void)parse_config_text("strategy = eafl\nblend_f = 1.5\n");
        FAIL("expected a range error");
    } catch (const ConfigRangeError& e) {
        CHECK(e.key() == "blend_f");
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("blend_f") != std::string::npos);
    }
    CHECK_THROWS_AS((void)parse_config_text("strategies =\n"), ConfigValidationError);
    CHECK_THROWS_AS((void)parse_config_text("this is not a pair\n"), ConfigSyntaxError);
    CHECK_THROWS_AS((void)parse_config_text("rounds = many\n"), ConfigSyntaxError);
    CHECK_THROWS_AS((void)parse_config_text("rounds = 5\nrounds = 6\n"), ConfigSyntaxError);
    CHECK_THROWS_AS((void)parse_config_text("warp_factor = 9\n"), ConfigUnknownKeyError);
    CHECK_THROWS_AS((void)parse_config_text("[task]\nblend_f = 0.5\n"), ConfigUnknownKeyError);
    CHECK_THROWS_AS((void)parse_config_text("[nonsense]\n"), ConfigUnknownKeyError);
    CHECK_THROWS_AS((void)parse_config_text("strategy = greedy\n"), ConfigSyntaxError);
    CHECK_THROWS_AS((void)parse_config_text("tier_mix = 0.5, 0.5, 0.5\n"), ConfigValidationError);
    CHECK_THROWS_AS((void)parse_config("/nonexistent/eafl.ini"), ConfigFileError);
    try {
        (void)parse_config_text("\n\n[task]\nlabels_per_client = 0\n");
        FAIL("expected a range error");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("overrides behave like file entries") {
    auto spec = parse_config_text("strategies = oort, eafl\nseeds = 1,2,3\n");
    apply_override(spec, "strategy", "random");
    apply_override(spec, "seed", "9");
    apply_override(spec, "rounds", "7");
    apply_override(spec, "blend_f", "0.75");
    CHECK(spec.strategies == std::vector<StrategyKind>{StrategyKind::Random});
    CHECK(spec.seeds == std::vector<std::uint64_t>{9});
    CHECK(spec.base.rounds == 7);
    CHECK(spec.base.blend_f == 0.75);
    CHECK_THROWS_AS(apply_override(spec, "blend_f", "-1"), ConfigRangeError);
    CHECK_THROWS_AS(apply_override(spec, "nope", "1"), ConfigUnknownKeyError);
}

TEST_CASE("every config field has a key") {
    const auto keys = config_keys();
    for (const char* k : {"simulation.n_clients", "simulation.model_bytes", "selection.blend_f",
                          "energy.busy_other_prob", "task.label_noise", "training.learning_rate",
                          "server.yogi_tau", "experiment.seeds"}) {
        CHECK(std::find(keys.begin(), keys.end(), k) != keys.end());
    }
}

TEST_CASE("csv format") {
    RoundRecord r;
    r.round = 3;
    r.sim_time_h = 0.25;
    r.accuracy = 0.5;
    r.round_failed = true;
    std::ostringstream out;
    write_csv(std::vector<RoundRecord>{r}, out);
    const auto lines = split(out.str(), '\n');
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == kCsvHeader);
    CHECK(lines[1] == "3,0.250000,0.000000,0.500000,0.000000,0,1.000000,0.000000,0,true");
    CHECK(out.str().back() == '\n');

    r.round_failed = false;
    std::ostringstream out2;
    write_csv(std::vector<RoundRecord>{r}, out2);
    const auto row = split(out2.str(), '\n')[1];
    CHECK(row.substr(row.size() - 6) == ",false");

    CHECK_THROWS((void)emit_csv(std::vector<RoundRecord>{}, scratch("empty") / "x.csv"));
    try {
        emit_csv(std::vector<RoundRecord>{r}, "/nonexistent/dir/out.csv");
        FAIL("expected an I/O error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/dir/out.csv") != std::string::npos);
    }
}

TEST_CASE("sample statistics") {
    const auto one = sample_stat(std::vector<double>{4.0});
    CHECK(one.mean == 4.0);
    CHECK(one.stddev == 0.0);
    const auto three = sample_stat(std::vector<double>{1.0, 2.0, 3.0});
    CHECK(three.mean == 2.0);
    CHECK(three.stddev == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(three.count == 3);
}

TEST_CASE("time to target") {
    std::vector<RoundRecord> rs(3);
    rs[0].accuracy = 0.2;
    rs[0].sim_time_h = 0.1;
    rs[1].accuracy = 0.61;
    rs[1].sim_time_h = 0.2;
    rs[2].accuracy = 0.7;
    rs[2].sim_time_h = 0.3;
    CHECK(*time_to_target(rs, 0.6) == 0.2);
    CHECK_FALSE(time_to_target(rs, 0.9).has_value());
}

TEST_CASE("dropout ratio is absent when eafl has none") {
    RunOutcome a;
    a.strategy = StrategyKind::Oort;
    a.final_dropouts = 4;
    RunOutcome b;
    b.strategy = StrategyKind::Eafl;
    b.final_dropouts = 0;
    auto report = summarize({a, b}, 0.6);
    REQUIRE(report.dropout_ratio_vs_eafl.size() == 1);
    CHECK_FALSE(report.dropout_ratio_vs_eafl[0].second.has_value());
    b.final_dropouts = 2;
    report = summarize({a, b}, 0.6);
    CHECK(*report.dropout_ratio_vs_eafl[0].second == 2.0);
}

TEST_CASE("experiment matrix writes csvs and a consistent summary") {
    auto spec = parse_config_text(kSmallRun);
    spec.output_dir = scratch("matrix");
    const auto report = run_experiments(spec);
    CHECK(report.runs.size() == 6);

    int csvs = 0;
    for (const auto& e : fs::directory_iterator(spec.output_dir)) {
        csvs += e.path().extension() == ".csv" ? 1 : 0;
    }
    CHECK(csvs == 6);
    REQUIRE(fs::exists(spec.output_dir / "summary.json"));

    // Independent reader: final rows of each CSV, averaged per strategy.
    std::map<std::string, std::vector<double>> acc;
    std::map<std::string, std::vector<double>> drops;
    std::map<std::string, std::vector<double>> jain;
    for (const char* s : {"random", "oort", "eafl"}) {
        for (int seed : {1, 2}) {
            const auto text = slurp(spec.output_dir / (std::string(s) + "_seed" + std::to_string(seed) + ".csv"));
            const auto lines = split(text, '\n');
            const auto header_cols = split(lines[0], ',').size();
            for (const auto& l : lines) {
                CHECK(split(l, ',').size() == header_cols);
            }
            const auto last = split(lines.back(), ',');
            acc[s].push_back(std::stod(last[3]));
            drops[s].push_back(std::stod(last[5]));
            jain[s].push_back(std::stod(last[6]));
        }
    }
    const auto doc = nlohmann::json::parse(slurp(spec.output_dir / "summary.json"));
    for (const char* s : {"random", "oort", "eafl"}) {
        auto mean = [](const std::vector<double>& v) { return (v[0] + v[1]) / 2.0; };
        CHECK(std::abs(doc["strategies"][s]["final_accuracy"]["mean"].get<double>() - mean(acc[s])) <= 1e-9);
        CHECK(std::abs(doc["strategies"][s]["final_dropouts"]["mean"].get<double>() - mean(drops[s])) <= 1e-9);
        CHECK(std::abs(doc["strategies"][s]["final_jains_index"]["mean"].get<double>() - mean(jain[s])) <= 1e-9);
    }

    // Same spec again: byte-identical files.
    auto again = spec;
    again.output_dir = scratch("matrix_again");
    (void)run_experiments(again);
    for (const auto& e : fs::directory_iterator(spec.output_dir)) {
        CHECK(slurp(e.path()) == slurp(again.output_dir / e.path().filename()));
    }
}

TEST_CASE("unwritable output directory fails before simulating") {
    const auto dir = scratch("blocked");
    fs::create_directories(dir);
    std::ofstream(dir / "file") << "x";
    auto spec = parse_config_text(kSmallRun);
    spec.output_dir = dir / "file" / "sub";
    CHECK_THROWS_AS((void)run_experiments(spec), IoError);
}

}
