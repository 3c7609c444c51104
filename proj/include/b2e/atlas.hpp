#ifndef B2E_ATLAS_HPP
#define B2E_ATLAS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "b2e/finite_mdp.hpp"
#include "b2e/oracle.hpp"

namespace b2e {

/// Thrown when an exhaustive enumeration would exceed the 2^(n*m) budget.
struct EnumerationBudgetExceeded : std::runtime_error {
    int required_bits;
    explicit EnumerationBudgetExceeded(int bits);
};

/// A transition witnessing a verification failure.
struct Witness {
    int state = -1;
    int action = -1;
    int successor = -1;
};

struct FixedPointReport {
    TabularCritic critic;
    bool is_spurious = false;  // the all-ones critic
    bool cis_verified = false;
    bool unreachable_verified = false;
    bool policy_renders_cis = false;
    std::optional<Witness> counterexample;
};

struct AtlasReport {
    FiniteMdp mdp;
    std::vector<FixedPointReport> fixed_points;
    bool maximality_verified = false;
    bool all_verified = false;
};

/// All binary b with Tb = b, in increasing order of the packed (s,a) bitmask
/// (pair (s,a) is bit s*m + a). Requires n*m <= 20.
std::vector<TabularCritic> enumerate_fixed_points(const FiniteMdp& mdp);

/// C = {s : min_a b(s,a) = 0}, with per-action detail.
SafeSetMask cis_set_of(const TabularCritic& b);

/// Checks that the safest-support policy keeps C invariant and away from the
/// failure set, by exhaustive closure over support branches.
bool verify_cis(const FiniteMdp& mdp, const TabularCritic& b,
                const SafeSetMask& cis, Witness* witness = nullptr);

/// Checks that no action sequence from outside C ever enters C.
bool verify_unreachable(const FiniteMdp& mdp, const SafeSetMask& cis,
                        Witness* witness = nullptr);

/// Checks, for every non-spurious fixed point's set C and every strict subset
/// X of C reachable from C \ X, that X is not the CIS set of any enumerated
/// fixed point.
bool verify_maximality(const FiniteMdp& mdp,
                       const std::vector<TabularCritic>& fixed_points);

/// Enumerates and certifies every fixed point of one instance.
AtlasReport certify_instance(const FiniteMdp& mdp);

/// Seeded random instance: uniform successor table, insecurity density 0.2,
/// all-unsafe degenerates filtered out.
FiniteMdp random_finite_mdp(std::mt19937_64& rng, int max_states,
                            int max_actions, double unsafe_density = 0.2);

struct AtlasHarnessResult {
    int instances = 0;
    int fixed_points_total = 0;
    int skipped_budget = 0;
    int violations = 0;
};

/// Runs certify_instance over `count` seeded random MDPs, optionally writing
/// one JSON report per instance to `json_out`.
AtlasHarnessResult run_atlas_harness(std::uint64_t seed, int count,
                                     int max_states, int max_actions,
                                     std::ostream* json_out = nullptr);

void write_atlas_report_json(const AtlasReport& report, std::ostream& out);

}  // namespace b2e

#endif
