#include <eafl/selection.hpp>

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace eafl;

namespace {

// A candidate whose raw utility equals `util` (one sample, squared loss util^2, on time).
Candidate scored(ClientId id, double util, double battery_pct = 100.0, double cost = 0.0) {
    Candidate c;
    c.id = id;
    c.stats.sample_count = 1;
    c.stats.sum_sq_loss = util * util;
    c.stats.last_duration_s = 1.0;
    c.stats.rounds_participated = 1;
    c.battery = BatteryState::at_percent(1000.0, battery_pct);
    c.projected_cost_joules = cost;
    return c;
}

CandidatePool pool_of(std::initializer_list<Candidate> cs) {
    CandidatePool pool;
    for (const auto& c : cs) {
        pool.add(c);
    }
    return pool;
}

} // namespace

TEST_SUITE("selection") {

TEST_CASE("strategy names") {
    CHECK(parse_strategy("eafl") == StrategyKind::Eafl);
    CHECK(parse_strategy("Oort") == StrategyKind::Oort);
    CHECK(parse_strategy("RANDOM") == StrategyKind::Random);
    CHECK(to_string(StrategyKind::Oort) == "oort");
    CHECK_THROWS((void)parse_strategy("greedy"));
}

TEST_CASE("random selection") {
    auto rng = make_rng(1, 0, RngPurpose::Selection);
    const auto three = pool_of({scored(1, 1), scored(2, 1), scored(3, 1)});
    auto sel = select_random(three, 3, rng);
    REQUIRE(sel);
    CHECK(std::set<ClientId>(sel->begin(), sel->end()) == std::set<ClientId>{1, 2, 3});

    const auto four = pool_of({scored(1, 1), scored(2, 1), scored(3, 1), scored(4, 1)});
    auto r1 = make_rng(42, 3, RngPurpose::Selection);
    auto r2 = make_rng(42, 3, RngPurpose::Selection);
    CHECK(select_random(four, 2, r1) == select_random(four, 2, r2));

    CHECK_FALSE(select_random(CandidatePool{}, 2, rng).has_value());
}

TEST_CASE("top-k examples") {
    UtilityParams params;
    auto rng = make_rng(1, 0, RngPurpose::Selection);
    const auto pool = pool_of({scored(1, 0.9), scored(2, 0.5), scored(3, 0.1)});
    CHECK(select_top_k(pool, 2, StrategyKind::Oort, params, 0.0, rng) == std::vector<ClientId>{1, 2});

    const auto tie = pool_of({scored(2, 0.7), scored(1, 0.7)});
    CHECK(select_top_k(tie, 1, StrategyKind::Oort, params, 0.0, rng) == std::vector<ClientId>{1});

    auto all = select_top_k(pool, 3, StrategyKind::Eafl, params, 1.0, rng);
    REQUIRE(all);
    CHECK(std::set<ClientId>(all->begin(), all->end()) == std::set<ClientId>{1, 2, 3});

    CHECK_FALSE(select_top_k(CandidatePool{}, 2, StrategyKind::Oort, params, 0.0, rng).has_value());
}

TEST_CASE("f = 0 ranks by remaining charge after the projected cost") {
    UtilityParams params;
    params.blend_f = 0.0;
    auto rng = make_rng(1, 0, RngPurpose::Selection);
    // Utilities favour client 1; power favours 3, then 2 (cost pushes 2 below 3).
    const auto pool = pool_of({scored(1, 9.0, 30.0), scored(2, 1.0, 95.0, 200.0), scored(3, 0.5, 90.0)});
    CHECK(select_top_k(pool, 2, StrategyKind::Eafl, params, 0.0, rng) == std::vector<ClientId>{3, 2});
}

TEST_CASE("unexplored clients take the best explored utility") {
    UtilityParams params;
    CandidatePool pool;
    pool.add(scored(1, 3.0));
    pool.add(scored(2, 1.0));
    Candidate fresh;
    fresh.id = 3;
    fresh.battery = BatteryState::at_percent(1000.0, 50.0);
    pool.add(fresh);
    const auto scores = score_candidates(pool, StrategyKind::Oort, params);
    CHECK(scores[2].util_raw == doctest::Approx(3.0));
    CHECK(scores[2].util_norm == 1.0);

    CandidatePool only_fresh;
    only_fresh.add(fresh);
    CHECK(score_candidates(only_fresh, StrategyKind::Oort, params)[0].util_norm == 1.0);
}

TEST_CASE("dropped clients are never admitted") {
    CandidatePool pool;
    auto dead = scored(7, 5.0);
    dead.battery = BatteryState(1000.0, 0.0);
    CHECK_FALSE(pool.add(dead));
    CHECK(pool.empty());
}

TEST_CASE("selection size, uniqueness and determinism on random pools") {
    auto gen = make_rng(77, 0, RngPurpose::Data);
    UtilityParams params;
    for (int trial = 0; trial < 200; ++trial) {
        CandidatePool pool;
        const auto n = static_cast<int>(uniform_below(gen, 25));
        for (int i = 0; i < n; ++i) {
            auto c = scored(static_cast<ClientId>(3 * i + 1), 5.0 * uniform01(gen),
                            100.0 * uniform01(gen), 50.0 * uniform01(gen));
            if (uniform01(gen) < 0.2) {
                c.stats = {};
            }
            pool.add(c);
        }
        const int k = 1 + static_cast<int>(uniform_below(gen, 15));
        const double eps = uniform01(gen);
        params.blend_f = uniform01(gen);
        for (auto s : {StrategyKind::Random, StrategyKind::Oort, StrategyKind::Eafl}) {
            auto r1 = make_rng(5, static_cast<std::uint64_t>(trial), RngPurpose::Selection);
            auto r2 = make_rng(5, static_cast<std::uint64_t>(trial), RngPurpose::Selection);
            const auto a = select_top_k(pool, k, s, params, eps, r1);
            const auto b = select_top_k(pool, k, s, params, eps, r2);
            CHECK(a == b);
            if (pool.empty()) {
                CHECK_FALSE(a.has_value());
                continue;
            }
            REQUIRE(a);
            CHECK(a->size() == std::min<std::size_t>(static_cast<std::size_t>(k), pool.size()));
            CHECK(std::set<ClientId>(a->begin(), a->end()).size() == a->size());
            for (auto id : *a) {
                CHECK(std::any_of(pool.entries().begin(), pool.entries().end(),
                                  [id](const Candidate& c) { return c.id == id; }));
            }
        }
    }
}

TEST_CASE("f = 1 and oort agree on random pools") {
    auto gen = make_rng(78, 0, RngPurpose::Data);
    UtilityParams params;
    params.blend_f = 1.0;
    for (int trial = 0; trial < 200; ++trial) {
        CandidatePool pool;
        for (int i = 0; i < 20; ++i) {
            pool.add(scored(i, 5.0 * uniform01(gen), 100.0 * uniform01(gen), 20.0 * uniform01(gen)));
        }
        auto r1 = make_rng(6, static_cast<std::uint64_t>(trial), RngPurpose::Selection);
        auto r2 = make_rng(6, static_cast<std::uint64_t>(trial), RngPurpose::Selection);
        CHECK(select_top_k(pool, 10, StrategyKind::Eafl, params, 0.0, r1) ==
              select_top_k(pool, 10, StrategyKind::Oort, params, 0.0, r2));
    }
}

TEST_CASE("projected round cost") {
    const auto hi = DeviceProfile::for_tier(0, DeviceTier::HighEnd, Medium::WiFi);
    const double comm_at_zero = 0.0017 * 55440.0; // WiFi download intercept only
    CHECK(projected_round_cost(hi, 0, 1000, 1) - comm_at_zero == doctest::Approx(168.35).epsilon(1e-4));
    CHECK(projected_round_cost(hi, 0, 0, 1) == doctest::Approx(comm_at_zero).epsilon(1e-12));
    // 10 MB over 20 Mbps down and 8 Mbps up.
    const double down_h = 4.0 / 3600.0;
    const double up_h = 10.0 / 3600.0;
    const double comm = ((18.09 * down_h + 0.17) + (21.24 * up_h - 2.68 > 0 ? 21.24 * up_h - 2.68 : 0.0)) / 100.0 * 55440.0;
    CHECK(projected_round_cost(hi, 10'000'000, 0, 1) == doctest::Approx(comm).epsilon(1e-12));
    CHECK(transfer_seconds(10'000'000, 20.0) == doctest::Approx(4.0).epsilon(1e-15));
}

}
