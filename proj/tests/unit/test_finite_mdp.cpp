#include <doctest.h>

#include <random>
#include <sstream>
#include <stdexcept>

#include "b2e/atlas.hpp"
#include "b2e/finite_mdp.hpp"
#include "support/reference_oracles.hpp"

using namespace b2e;
namespace bt = b2e::testing;

TEST_CASE("validate rejects out-of-range successors and bad shapes") {
    FiniteMdp mdp = bt::three_state_chain();
    CHECK_NOTHROW(mdp.validate());
    mdp.next[3] = 5;
    CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
    mdp = bt::three_state_chain();
    mdp.unsafe.pop_back();
    CHECK_THROWS_AS(mdp.validate(), std::invalid_argument);
}

TEST_CASE("reachable_set at t=0 is the singleton start state") {
    const FiniteMdp mdp = bt::three_state_chain();
    const FinitePolicy pi = FinitePolicy::uniform(mdp);
    for (int s = 0; s < mdp.n; ++s)
        CHECK(reachable_set(mdp, pi, s, 0) == std::set<int>{s});
}

TEST_CASE("deterministic right-moving policy reaches exactly one state") {
    FiniteMdp mdp;
    mdp.n = 2;
    mdp.m = 2;
    mdp.next = {0, 1, 1, 1};
    mdp.unsafe = {0, 0};
    const FinitePolicy pi = FinitePolicy::deterministic(mdp, {1, 1});
    CHECK(reachable_set(mdp, pi, 0, 1) == std::set<int>{1});
}

TEST_CASE("stochastic support of 2 unions both branches") {
    const FiniteMdp mdp = bt::three_state_chain();
    const FinitePolicy pi = FinitePolicy::uniform(mdp);  // support {stay,right}
    CHECK(reachable_set(mdp, pi, 0, 1) == std::set<int>{0, 1});
    CHECK(reachable_set(mdp, pi, 0, 2) == std::set<int>{0, 1, 2});
}

TEST_CASE("reachable_set_sa pins the first action") {
    const FiniteMdp mdp = bt::three_state_chain();
    const FinitePolicy pi = FinitePolicy::uniform(mdp);
    CHECK(reachable_set_sa(mdp, pi, 0, 1, 1) == std::set<int>{1});
    for (int t = 1; t <= 4; ++t)
        CHECK(reachable_set_sa(mdp, pi, 0, 1, t) ==
              reachable_set(mdp, pi, mdp.successor(0, 1), t - 1));
}

TEST_CASE("reachability matches the brute-force path-enumeration oracle") {
    std::mt19937_64 rng(101);
    for (int inst = 0; inst < 40; ++inst) {
        const FiniteMdp mdp = random_finite_mdp(rng, 5, 3);
        const FinitePolicy pi = FinitePolicy::uniform(mdp);
        for (int s = 0; s < mdp.n; ++s)
            for (int t = 0; t <= 3; ++t)
                CHECK(reachable_set(mdp, pi, s, t) ==
                      bt::brute_force_reachable(mdp, pi, s, t));
    }
}

TEST_CASE("t-step identity: reach(s,t) = union of reach(s',t-1)") {
    std::mt19937_64 rng(202);
    for (int inst = 0; inst < 25; ++inst) {
        const FiniteMdp mdp = random_finite_mdp(rng, 6, 3);
        const FinitePolicy pi = FinitePolicy::uniform(mdp);
        for (int s = 0; s < mdp.n; ++s)
            for (int t = 1; t <= 4; ++t) {
                std::set<int> expected;
                for (int mid : reachable_set(mdp, pi, s, 1))
                    for (int dst : reachable_set(mdp, pi, mid, t - 1))
                        expected.insert(dst);
                CHECK(reachable_set(mdp, pi, s, t) == expected);
            }
    }
}

TEST_CASE("policy support and construction helpers") {
    const FiniteMdp mdp = bt::three_state_chain();
    const FinitePolicy uni = FinitePolicy::uniform(mdp);
    CHECK(uni.support(0) == std::vector<int>{0, 1});
    CHECK(uni.at(1, 0) == doctest::Approx(0.5));
    const FinitePolicy det = FinitePolicy::deterministic(mdp, {0, 0, 1});
    CHECK(det.support(1) == std::vector<int>{0});
    CHECK(det.at(2, 1) == 1.0);
}

TEST_CASE("text round trip preserves the MDP and skips comments") {
    const FiniteMdp mdp = bt::three_state_chain();
    std::stringstream io;
    io << "# three-state chain\n";
    save_finite_mdp(mdp, io);
    const FiniteMdp back = load_finite_mdp(io);
    CHECK(back.n == mdp.n);
    CHECK(back.m == mdp.m);
    CHECK(back.next == mdp.next);
    CHECK(back.unsafe == mdp.unsafe);
}

TEST_CASE("loading a malformed stream fails") {
    std::stringstream io("3 2 0 1 1");
    CHECK_THROWS_AS(load_finite_mdp(io), std::invalid_argument);
}
