#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "b2e/atlas.hpp"
#include "support/reference_oracles.hpp"

using namespace b2e;
namespace bt = b2e::testing;

TEST_CASE("safe self-loop enumerates exactly the two constant critics") {
    FiniteMdp mdp;
    mdp.n = 1;
    mdp.m = 1;
    mdp.next = {0};
    mdp.unsafe = {0};
    const auto fps = enumerate_fixed_points(mdp);
    REQUIRE(fps.size() == 2);
    CHECK(fps[0] == TabularCritic::constant(1, 1, 0));
    CHECK(fps[1] == TabularCritic::constant(1, 1, 1));
}

TEST_CASE("the spurious all-ones critic is always enumerated") {
    std::mt19937_64 rng(41);
    for (int inst = 0; inst < 25; ++inst) {
        const FiniteMdp mdp = random_finite_mdp(rng, 5, 3);
        const auto fps = enumerate_fixed_points(mdp);
        const TabularCritic ones = TabularCritic::constant(mdp.n, mdp.m, 1);
        CHECK(std::find(fps.begin(), fps.end(), ones) != fps.end());
    }
}

TEST_CASE("enumeration agrees with checking every candidate under T") {
    std::mt19937_64 rng(42);
    for (int inst = 0; inst < 10; ++inst) {
        const FiniteMdp mdp = random_finite_mdp(rng, 4, 2);
        const auto fps = enumerate_fixed_points(mdp);
        std::vector<TabularCritic> expected;
        const int bits = mdp.n * mdp.m;
        for (std::uint32_t mask = 0; mask < (1u << bits); ++mask) {
            TabularCritic b = TabularCritic::constant(mdp.n, mdp.m, 0);
            for (int k = 0; k < bits; ++k)
                b.values[k] = (mask >> k) & 1u;
            if (apply_operator(b, mdp) == b) expected.push_back(std::move(b));
        }
        std::sort(expected.begin(), expected.end(),
                  [](const TabularCritic& x, const TabularCritic& y) {
                      return x.values < y.values;
                  });
        REQUIRE(fps.size() == expected.size());
        for (std::size_t k = 0; k < expected.size(); ++k)
            CHECK(fps[k] == expected[k]);
    }
}

TEST_CASE("the chain's fixed points contain b_star as the minimum") {
    const FiniteMdp mdp = bt::three_state_chain();
    const auto fps = enumerate_fixed_points(mdp);
    const TabularCritic b_star = optimal_b_star(mdp);
    bool found = false;
    for (const auto& fp : fps) {
        bool leq = true;
        for (std::size_t k = 0; k < fp.values.size(); ++k)
            if (b_star.values[k] > fp.values[k]) leq = false;
        CHECK(leq);
        if (fp == b_star) found = true;
    }
    CHECK(found);
}

TEST_CASE("enumeration refuses instances over the budget") {
    FiniteMdp mdp;
    mdp.n = 7;
    mdp.m = 3;  // 21 bits > 20
    mdp.next.assign(21, 0);
    mdp.unsafe.assign(7, 0);
    CHECK_THROWS_AS(enumerate_fixed_points(mdp), EnumerationBudgetExceeded);
    try {
        enumerate_fixed_points(mdp);
    } catch (const EnumerationBudgetExceeded& e) {
        CHECK(e.required_bits == 21);
    }
}

TEST_CASE("cis_set_of follows the min-over-actions definition") {
    const FiniteMdp mdp = bt::three_state_chain();
    const TabularCritic ones = TabularCritic::constant(mdp.n, mdp.m, 1);
    CHECK(cis_set_of(ones).safe_count() == 0);

    const TabularCritic b_star = optimal_b_star(mdp);
    const SafeSetMask cis = cis_set_of(b_star);
    CHECK(cis.state_safe == std::vector<std::uint8_t>({1, 1, 0}));
    for (int s = 0; s < mdp.n; ++s)
        if (mdp.insecurity(s)) CHECK(cis.state_safe[s] == 0);
}

TEST_CASE("verify_cis: empty set vacuous, chain verified, corruption caught") {
    const FiniteMdp mdp = bt::three_state_chain();
    const TabularCritic ones = TabularCritic::constant(mdp.n, mdp.m, 1);
    CHECK(verify_cis(mdp, ones, cis_set_of(ones)));

    const TabularCritic b_star = optimal_b_star(mdp);
    CHECK(verify_cis(mdp, b_star, cis_set_of(b_star)));

    // Corrupted non-fixed-point: declares (1, right) safe although that action
    // drives straight into the failure state.
    TabularCritic bad = b_star;
    bad.at(1, 0) = 1;
    bad.at(1, 1) = 0;
    Witness w;
    CHECK_FALSE(verify_cis(mdp, bad, cis_set_of(bad), &w));
    CHECK(w.state == 1);
    CHECK(w.action == 1);
    CHECK(w.successor == 2);
}

TEST_CASE("verify_unreachable holds on the chain") {
    const FiniteMdp mdp = bt::three_state_chain();
    const TabularCritic b_star = optimal_b_star(mdp);
    CHECK(verify_unreachable(mdp, cis_set_of(b_star)));
}

TEST_CASE("verify_unreachable flags a reachable candidate set") {
    // 0 <-> 1 with 1 unsafe is not a fixed-point scenario; craft a mask whose
    // "CIS" {0} is reachable from outside via the back edge 1 -> 0.
    FiniteMdp mdp;
    mdp.n = 2;
    mdp.m = 1;
    mdp.next = {0, 0};
    mdp.unsafe = {0, 0};
    SafeSetMask mask{2, 1, {1, 0}, {1, 0}};
    Witness w;
    CHECK_FALSE(verify_unreachable(mdp, mask, &w));
    CHECK(w.state == 1);
    CHECK(w.successor == 0);
}

TEST_CASE("maximality holds on the chain extended with a back edge") {
    // 1 can move back to 0, so strict subsets of the safe set are reachable
    // and the corollary check is nonvacuous.
    FiniteMdp mdp;
    mdp.n = 3;
    mdp.m = 2;
    mdp.next = {0, 1,   // from 0: stay, right
                0, 2,   // from 1: back, right
                2, 2};  // absorbing failure
    mdp.unsafe = {0, 0, 1};
    const auto fps = enumerate_fixed_points(mdp);
    CHECK(verify_maximality(mdp, fps));
}

TEST_CASE("certify_instance accepts the chain") {
    const AtlasReport report = certify_instance(bt::three_state_chain());
    CHECK(report.all_verified);
    CHECK(report.maximality_verified);
    int spurious = 0;
    for (const auto& fp : report.fixed_points) {
        if (fp.is_spurious) {
            ++spurious;
            continue;
        }
        CHECK(fp.cis_verified);
        CHECK(fp.unreachable_verified);
        CHECK(fp.policy_renders_cis);
        CHECK_FALSE(fp.counterexample.has_value());
    }
    CHECK(spurious == 1);
}

TEST_CASE("random instance generator is seeded and filtered") {
    std::mt19937_64 a(77), b(77);
    for (int k = 0; k < 20; ++k) {
        const FiniteMdp x = random_finite_mdp(a, 6, 3);
        const FiniteMdp y = random_finite_mdp(b, 6, 3);
        CHECK(x.next == y.next);
        CHECK(x.unsafe == y.unsafe);
        CHECK(x.n >= 2);
        CHECK(x.n <= 6);
        CHECK(x.m >= 1);
        CHECK(x.m <= 3);
        CHECK_NOTHROW(x.validate());
        bool any_safe = false;
        for (auto u : x.unsafe) any_safe |= (u == 0);
        CHECK(any_safe);
    }
}

TEST_CASE("harness passes a quick randomized sweep with JSON output") {
    std::stringstream json;
    const AtlasHarnessResult r = run_atlas_harness(123, 20, 5, 3, &json);
    CHECK(r.instances == 20);
    CHECK(r.violations == 0);
    CHECK(r.skipped_budget == 0);
    CHECK(r.fixed_points_total >= 20);  // at least the spurious one each
    CHECK(json.str().front() == '[');

    std::stringstream again;
    run_atlas_harness(123, 20, 5, 3, &again);
    CHECK(json.str() == again.str());
}

TEST_CASE("atlas report JSON serializes flags and witnesses") {
    const AtlasReport report = certify_instance(bt::three_state_chain());
    std::stringstream out;
    write_atlas_report_json(report, out);
    CHECK(out.str().find("\"is_spurious\"") != std::string::npos);
    CHECK(out.str().find("\"cis_verified\"") != std::string::npos);
}
