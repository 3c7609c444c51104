#include "b2e/atlas.hpp"

#include <bit>
#include <deque>
#include <ostream>
#include <string>

#include <json.hpp>

namespace b2e {

EnumerationBudgetExceeded::EnumerationBudgetExceeded(int bits)
    : std::runtime_error("fixed-point enumeration needs 2^" +
                         std::to_string(bits) +
                         " candidates, over the 2^20 budget"),
      required_bits(bits) {}

namespace {

TabularCritic critic_from_mask(const FiniteMdp& mdp, std::uint32_t mask) {
    TabularCritic b{mdp.n, mdp.m, std::vector<std::uint8_t>(mdp.n * mdp.m)};
    for (int k = 0; k < mdp.n * mdp.m; ++k) b.values[k] = (mask >> k) & 1u;
    return b;
}

/// Any-action forward closure from a set of states, as a bitmask. Failure
/// states are absorbing: episodes end in G, so no transition leaves them.
std::uint32_t closure_all_actions(const FiniteMdp& mdp, std::uint32_t from) {
    std::uint32_t seen = from;
    std::deque<int> queue;
    for (int s = 0; s < mdp.n; ++s)
        if ((from >> s) & 1u) queue.push_back(s);
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        if (mdp.unsafe[s]) continue;
        for (int a = 0; a < mdp.m; ++a) {
            const int nxt = mdp.successor(s, a);
            if (!((seen >> nxt) & 1u)) {
                seen |= 1u << nxt;
                queue.push_back(nxt);
            }
        }
    }
    return seen;
}

std::uint32_t state_mask_of(const SafeSetMask& cis) {
    std::uint32_t mask = 0;
    for (int s = 0; s < cis.n; ++s)
        if (cis.state_safe[s]) mask |= 1u << s;
    return mask;
}

}  // namespace

std::vector<TabularCritic> enumerate_fixed_points(const FiniteMdp& mdp) {
    const int bits = mdp.n * mdp.m;
    if (bits > 20) throw EnumerationBudgetExceeded(bits);

    // Precompute per-pair successor rows. A fixed point must have b(s,a) = 1
    // wherever i(s) = 1, so only pairs at secure states are free.
    std::vector<std::uint32_t> row_mask(bits);
    std::uint32_t forced = 0;
    std::vector<int> free_bits;
    for (int s = 0; s < mdp.n; ++s)
        for (int a = 0; a < mdp.m; ++a) {
            const int k = s * mdp.m + a;
            const int nxt = mdp.successor(s, a);
            row_mask[k] = ((1u << mdp.m) - 1u) << (nxt * mdp.m);
            if (mdp.unsafe[s])
                forced |= 1u << k;
            else
                free_bits.push_back(k);
        }

    std::vector<TabularCritic> result;
    const std::uint64_t count = 1ull << free_bits.size();
    for (std::uint64_t c = 0; c < count; ++c) {
        std::uint32_t b = forced;
        for (std::size_t j = 0; j < free_bits.size(); ++j)
            if ((c >> j) & 1ull) b |= 1u << free_bits[j];
        bool fixed = true;
        for (int k = 0; k < bits && fixed; ++k) {
            const std::uint32_t tb =
                ((forced >> k) & 1u) ||
                ((b & row_mask[k]) == row_mask[k]);
            fixed = tb == ((b >> k) & 1u);
        }
        if (fixed) result.push_back(critic_from_mask(mdp, b));
    }
    // Free bits are the low-order bits in enumeration order, so the result is
    // already sorted by packed mask; re-sorting keeps the ordering contract
    // explicit.
    std::sort(result.begin(), result.end(),
              [](const TabularCritic& x, const TabularCritic& y) {
                  return x.values < y.values;
              });
    return result;
}

SafeSetMask cis_set_of(const TabularCritic& b) { return safe_set_of(b); }

bool verify_cis(const FiniteMdp& mdp, const TabularCritic& b,
                const SafeSetMask& cis, Witness* witness) {
    // Exhaustive closure of C under the safest-support policy
    // (support(s) = {a : b(s,a) = 0}). Every visited transition must stay in
    // C and outside the failure set.
    std::vector<std::uint8_t> seen(mdp.n, 0);
    std::deque<int> queue;
    for (int s = 0; s < mdp.n; ++s)
        if (cis.state_safe[s]) {
            if (mdp.unsafe[s]) {
                if (witness) *witness = {s, -1, -1};
                return false;
            }
            seen[s] = 1;
            queue.push_back(s);
        }
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (int a = 0; a < mdp.m; ++a) {
            if (b.at(s, a) != 0) continue;  // outside the policy support
            const int nxt = mdp.successor(s, a);
            if (!cis.state_safe[nxt] || mdp.unsafe[nxt]) {
                if (witness) *witness = {s, a, nxt};
                return false;
            }
            if (!seen[nxt]) {
                seen[nxt] = 1;
                queue.push_back(nxt);
            }
        }
    }
    return true;
}

bool verify_unreachable(const FiniteMdp& mdp, const SafeSetMask& cis,
                        Witness* witness) {
    // BFS over all actions from every state outside C; horizon n is implicit
    // in the closure (longer paths revisit states). Failure states terminate
    // the episode, so their outgoing transitions never occur and do not count
    // as reachability into C.
    std::vector<std::uint8_t> seen(mdp.n, 0);
    std::deque<int> queue;
    for (int s = 0; s < mdp.n; ++s)
        if (!cis.state_safe[s]) {
            seen[s] = 1;
            queue.push_back(s);
        }
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        if (mdp.unsafe[s]) continue;
        for (int a = 0; a < mdp.m; ++a) {
            const int nxt = mdp.successor(s, a);
            if (cis.state_safe[nxt]) {
                if (witness) *witness = {s, a, nxt};
                return false;
            }
            if (!seen[nxt]) {
                seen[nxt] = 1;
                queue.push_back(nxt);
            }
        }
    }
    return true;
}

bool verify_maximality(const FiniteMdp& mdp,
                       const std::vector<TabularCritic>& fixed_points) {
    std::vector<std::uint32_t> cis_masks;
    for (const auto& fp : fixed_points)
        cis_masks.push_back(state_mask_of(cis_set_of(fp)));

    for (std::uint32_t c : cis_masks) {
        if (c == 0) continue;  // spurious / empty set: nothing to check
        // Every strict subset X of C that is reachable from C \ X must not be
        // the CIS set of any enumerated fixed point.
        for (std::uint32_t x = (c - 1) & c;; x = (x - 1) & c) {
            const std::uint32_t rest = c & ~x;
            if (x != 0 && rest != 0) {
                const std::uint32_t reached = closure_all_actions(mdp, rest);
                if ((reached & x) != 0) {
                    for (std::uint32_t other : cis_masks)
                        if (other == x) return false;
                }
            }
            if (x == 0) break;
        }
    }
    return true;
}

AtlasReport certify_instance(const FiniteMdp& mdp) {
    AtlasReport report;
    report.mdp = mdp;
    const auto fixed_points = enumerate_fixed_points(mdp);
    const auto all_ones = TabularCritic::constant(mdp.n, mdp.m, 1);
    bool all_ok = true;
    for (const auto& fp : fixed_points) {
        FixedPointReport r;
        r.critic = fp;
        r.is_spurious = fp == all_ones;
        if (!r.is_spurious) {
            const SafeSetMask cis = cis_set_of(fp);
            Witness w;
            r.cis_verified = verify_cis(mdp, fp, cis, &w);
            if (!r.cis_verified) r.counterexample = w;
            r.policy_renders_cis = r.cis_verified;
            if (r.cis_verified) {
                r.unreachable_verified = verify_unreachable(mdp, cis, &w);
                if (!r.unreachable_verified) r.counterexample = w;
            }
            all_ok = all_ok && r.cis_verified && r.unreachable_verified;
        }
        report.fixed_points.push_back(std::move(r));
    }
    report.maximality_verified = verify_maximality(mdp, fixed_points);
    report.all_verified = all_ok && report.maximality_verified;
    return report;
}

FiniteMdp random_finite_mdp(std::mt19937_64& rng, int max_states,
                            int max_actions, double unsafe_density) {
    std::uniform_int_distribution<int> n_dist(2, max_states);
    std::uniform_int_distribution<int> m_dist(1, max_actions);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;;) {
        FiniteMdp mdp;
        mdp.n = n_dist(rng);
        mdp.m = m_dist(rng);
        std::uniform_int_distribution<int> succ(0, mdp.n - 1);
        mdp.next.resize(mdp.n * mdp.m);
        for (auto& v : mdp.next) v = succ(rng);
        mdp.unsafe.resize(mdp.n);
        bool any_secure = false;
        for (auto& b : mdp.unsafe) {
            b = unit(rng) < unsafe_density ? 1 : 0;
            any_secure = any_secure || b == 0;
        }
        if (any_secure) return mdp;
    }
}

AtlasHarnessResult run_atlas_harness(std::uint64_t seed, int count,
                                     int max_states, int max_actions,
                                     std::ostream* json_out) {
    std::mt19937_64 rng(seed);
    AtlasHarnessResult result;
    if (json_out) *json_out << "[\n";
    for (int k = 0; k < count; ++k) {
        const FiniteMdp mdp = random_finite_mdp(rng, max_states, max_actions);
        try {
            AtlasReport report = certify_instance(mdp);
            // The least fixed point must be enumerated and pointwise minimal.
            const TabularCritic b_star = optimal_b_star(mdp);
            bool found = false;
            bool minimal = true;
            for (const auto& fp : report.fixed_points) {
                found = found || fp.critic == b_star;
                for (int i = 0; i < mdp.n * mdp.m; ++i)
                    minimal = minimal &&
                              b_star.values[i] <= fp.critic.values[i];
            }
            if (!found || !minimal) report.all_verified = false;
            result.fixed_points_total +=
                static_cast<int>(report.fixed_points.size());
            if (!report.all_verified) ++result.violations;
            if (json_out) {
                write_atlas_report_json(report, *json_out);
                *json_out << (k + 1 == count ? "\n" : ",\n");
            }
        } catch (const EnumerationBudgetExceeded&) {
            ++result.skipped_budget;
            if (json_out)
                *json_out << "{\"skipped\":\"budget\"}"
                          << (k + 1 == count ? "\n" : ",\n");
        }
        ++result.instances;
    }
    if (json_out) *json_out << "]\n";
    return result;
}

void write_atlas_report_json(const AtlasReport& report, std::ostream& out) {
    nlohmann::json j;
    j["n"] = report.mdp.n;
    j["m"] = report.mdp.m;
    j["successors"] = report.mdp.next;
    j["insecurity"] = report.mdp.unsafe;
    j["maximality_verified"] = report.maximality_verified;
    j["all_verified"] = report.all_verified;
    auto& fps = j["fixed_points"] = nlohmann::json::array();
    for (const auto& fp : report.fixed_points) {
        nlohmann::json f;
        f["values"] = fp.critic.values;
        f["is_spurious"] = fp.is_spurious;
        f["cis_verified"] = fp.cis_verified;
        f["unreachable_verified"] = fp.unreachable_verified;
        f["policy_renders_cis"] = fp.policy_renders_cis;
        const SafeSetMask cis = cis_set_of(fp.critic);
        f["cis_states"] = cis.state_safe;
        if (fp.counterexample) {
            f["counterexample"] = {{"state", fp.counterexample->state},
                                   {"action", fp.counterexample->action},
                                   {"successor", fp.counterexample->successor}};
        }
        fps.push_back(std::move(f));
    }
    out << j.dump();
}

}  // namespace b2e
