#ifndef B2E_ORACLE_HPP
#define B2E_ORACLE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "b2e/finite_mdp.hpp"
#include "b2e/pendulum.hpp"

namespace b2e {

/// Binary critic over a finite MDP's (state, action) pairs.
struct TabularCritic {
    int n = 0;
    int m = 0;
    std::vector<std::uint8_t> values;  // row-major, entries in {0,1}

    static TabularCritic constant(int n, int m, std::uint8_t v) {
        return TabularCritic{n, m, std::vector<std::uint8_t>(n * m, v)};
    }
    std::uint8_t at(int s, int a) const { return values[s * m + a]; }
    std::uint8_t& at(int s, int a) { return values[s * m + a]; }
    std::uint8_t min_over_actions(int s) const;
    bool operator==(const TabularCritic&) const = default;
};

/// One application of the binary Bellman operator:
/// (Tb)(s,a) = i(s) + (1-i(s)) * min_a' b(F(s,a), a').
TabularCritic apply_operator(const TabularCritic& b, const FiniteMdp& mdp);

/// Least fixed point by Kleene iteration from b = 0. Always terminates on a
/// finite MDP; `iterations_out`, when given, receives the sweep count.
TabularCritic optimal_b_star(const FiniteMdp& mdp, int* iterations_out = nullptr);

/// v*(s) = min_a b*(s,a).
std::vector<std::uint8_t> optimal_v_star(const TabularCritic& b_star);

struct PolicyValue {
    std::vector<std::uint8_t> v;  // per state
    TabularCritic b;              // per (state, action)
};

/// Exact binary safety values of a policy, via reachability of the failure
/// set under policy-support actions.
PolicyValue policy_value(const FiniteMdp& mdp, const FinitePolicy& policy);

/// Boolean raster/table over states marking a candidate safe region, with
/// per-action detail. state bit = 1 iff some action bit = 1.
struct SafeSetMask {
    int n = 0;
    int m = 0;
    std::vector<std::uint8_t> state_safe;   // n bits
    std::vector<std::uint8_t> action_safe;  // n*m bits

    std::uint8_t action_at(int s, int a) const { return action_safe[s * m + a]; }
    int safe_count() const;
};

/// Safe set of a critic: state safe iff min_a b(s,a) = 0.
SafeSetMask safe_set_of(const TabularCritic& b);

/// Uniform grid over the pendulum box [-pi, pi) x [-omega_max, omega_max],
/// inducing a finite MDP with cell-center dynamics and nearest-cell snapping.
struct GridSpec {
    int n_theta = 0;
    int n_omega = 0;
    double theta_lo = 0, theta_hi = 0;
    double omega_lo = 0, omega_hi = 0;

    int cells() const { return n_theta * n_omega; }
    double theta_width() const { return (theta_hi - theta_lo) / n_theta; }
    double omega_width() const { return (omega_hi - omega_lo) / n_omega; }
    int index(int it, int iw) const { return it * n_omega + iw; }
    PendulumState center(int cell) const;
    int cell_of(const PendulumState& s) const;
};

struct GridMdp {
    GridSpec grid;
    PendulumParams params;
    FiniteMdp mdp;  // induced finite MDP over cells
};

/// Builds the induced finite MDP. Cells whose closed theta-range intersects
/// the failure set get insecurity 1.
GridMdp build_grid_mdp(const PendulumParams& params, int n_theta, int n_omega);

struct GridOracle {
    GridMdp grid;
    TabularCritic b_star;
    SafeSetMask safe;  // S_safe mask plus per-action safe bits (b* = 0)
};

/// Ground-truth pendulum safe region via the least fixed point on the grid.
/// Requires resolution >= 51 per axis.
GridOracle grid_oracle_pendulum(const PendulumParams& params, int resolution);
GridOracle grid_oracle_pendulum(const PendulumParams& params, int n_theta,
                                int n_omega);

/// Forward reachability closure from `initial_cells` using only actions with
/// b*(s,a) = 0, intersected with S_safe.
SafeSetMask reach_avoid_set(const GridOracle& oracle,
                            const std::vector<int>& initial_cells);

/// CSV raster export: theta index, omega index, per-action bits, state bit.
void write_mask_csv(const SafeSetMask& mask, const GridSpec& grid,
                    std::ostream& out);
/// Compact JSON header: bounds, resolution, params hash.
void write_mask_header_json(const GridOracle& oracle, std::ostream& out);

/// FNV-1a hash of a string, used for config/params fingerprints in outputs.
std::uint64_t fnv1a_hash(const std::string& text);
std::string pendulum_params_fingerprint(const PendulumParams& p);

}  // namespace b2e

#endif
