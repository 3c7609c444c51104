#ifndef B2E_FINITE_MDP_HPP
#define B2E_FINITE_MDP_HPP

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace b2e {

/// A finite deterministic MDP: n states, m actions, a row-major successor
/// table and a per-state insecurity bit.
struct FiniteMdp {
    int n = 0;
    int m = 0;
    std::vector<int> next;             // n*m successor indices, row-major
    std::vector<std::uint8_t> unsafe;  // n insecurity bits

    int successor(int s, int a) const { return next[s * m + a]; }
    int insecurity(int s) const { return unsafe[s]; }

    /// Throws std::invalid_argument on out-of-range successors or bad shapes.
    void validate() const;
};

/// Stochastic stationary policy on a finite MDP, stored as n x m probabilities.
/// Only the support matters for safety values.
struct FinitePolicy {
    int n = 0;
    int m = 0;
    std::vector<double> prob;  // row-major

    double at(int s, int a) const { return prob[s * m + a]; }
    std::vector<int> support(int s) const;

    static FinitePolicy deterministic(const FiniteMdp& mdp,
                                      const std::vector<int>& action_of_state);
    static FinitePolicy uniform(const FiniteMdp& mdp);
};

/// Exact t-step reachable set {s' : P(s_t = s' | s_0 = s0) > 0} by layered
/// expansion over policy-support actions. t = 0 returns {s0}.
std::set<int> reachable_set(const FiniteMdp& mdp, const FinitePolicy& policy,
                            int s0, int t);

/// Same with the first action pinned to a0.
std::set<int> reachable_set_sa(const FiniteMdp& mdp, const FinitePolicy& policy,
                               int s0, int a0, int t);

/// Structured text format: n, m, n*m successor indices, n insecurity bits,
/// all whitespace separated. '#' starts a comment line.
FiniteMdp load_finite_mdp(std::istream& in);
FiniteMdp load_finite_mdp_file(const std::string& path);
void save_finite_mdp(const FiniteMdp& mdp, std::ostream& out);

}  // namespace b2e

#endif
