#include "b2e/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace b2e {

std::uint8_t TabularCritic::min_over_actions(int s) const {
    std::uint8_t mn = 1;
    for (int a = 0; a < m; ++a) mn = std::min(mn, at(s, a));
    return mn;
}

TabularCritic apply_operator(const TabularCritic& b, const FiniteMdp& mdp) {
    TabularCritic out{mdp.n, mdp.m, std::vector<std::uint8_t>(mdp.n * mdp.m)};
    for (int s = 0; s < mdp.n; ++s) {
        const std::uint8_t i = mdp.unsafe[s];
        for (int a = 0; a < mdp.m; ++a) {
            out.at(s, a) =
                i ? 1 : b.min_over_actions(mdp.successor(s, a));
        }
    }
    return out;
}

TabularCritic optimal_b_star(const FiniteMdp& mdp, int* iterations_out) {
    TabularCritic b = TabularCritic::constant(mdp.n, mdp.m, 0);
    const int bound = mdp.n * mdp.m + 1;
    int iters = 0;
    for (;; ++iters) {
        TabularCritic nxt = apply_operator(b, mdp);
        if (nxt == b) break;
        // Monotone iteration from the bottom must be stationary within n*m
        // sweeps; anything else is an internal error.
        if (iters >= bound)
            throw std::logic_error("optimal_b_star: iteration exceeded n*m bound");
        b = std::move(nxt);
    }
    if (iterations_out) *iterations_out = iters;
    return b;
}

std::vector<std::uint8_t> optimal_v_star(const TabularCritic& b_star) {
    std::vector<std::uint8_t> v(b_star.n);
    for (int s = 0; s < b_star.n; ++s) v[s] = b_star.min_over_actions(s);
    return v;
}

PolicyValue policy_value(const FiniteMdp& mdp, const FinitePolicy& policy) {
    // v^pi(s) = 1 iff the failure set is reachable from s along policy-support
    // actions. Reverse BFS from the unsafe states.
    std::vector<std::vector<int>> rev(mdp.n);
    for (int s = 0; s < mdp.n; ++s)
        for (int a : policy.support(s)) rev[mdp.successor(s, a)].push_back(s);

    std::vector<std::uint8_t> v(mdp.n, 0);
    std::deque<int> queue;
    for (int s = 0; s < mdp.n; ++s)
        if (mdp.unsafe[s]) {
            v[s] = 1;
            queue.push_back(s);
        }
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (int p : rev[s])
            if (!v[p]) {
                v[p] = 1;
                queue.push_back(p);
            }
    }

    TabularCritic b{mdp.n, mdp.m, std::vector<std::uint8_t>(mdp.n * mdp.m)};
    for (int s = 0; s < mdp.n; ++s)
        for (int a = 0; a < mdp.m; ++a)
            b.at(s, a) = mdp.unsafe[s] ? 1 : v[mdp.successor(s, a)];
    return {std::move(v), std::move(b)};
}

int SafeSetMask::safe_count() const {
    int c = 0;
    for (auto b : state_safe) c += b;
    return c;
}

SafeSetMask safe_set_of(const TabularCritic& b) {
    SafeSetMask mask{b.n, b.m, std::vector<std::uint8_t>(b.n),
                     std::vector<std::uint8_t>(b.n * b.m)};
    for (int s = 0; s < b.n; ++s) {
        std::uint8_t any = 0;
        for (int a = 0; a < b.m; ++a) {
            const std::uint8_t safe = b.at(s, a) == 0 ? 1 : 0;
            mask.action_safe[s * b.m + a] = safe;
            any |= safe;
        }
        mask.state_safe[s] = any;
    }
    return mask;
}

PendulumState GridSpec::center(int cell) const {
    const int it = cell / n_omega;
    const int iw = cell % n_omega;
    return {theta_lo + (it + 0.5) * theta_width(),
            omega_lo + (iw + 0.5) * omega_width()};
}

int GridSpec::cell_of(const PendulumState& s) const {
    const double th = std::clamp(wrap_angle(s.theta), theta_lo,
                                 std::nextafter(theta_hi, theta_lo));
    const double om =
        std::clamp(s.omega, omega_lo, std::nextafter(omega_hi, omega_lo));
    int it = static_cast<int>((th - theta_lo) / theta_width());
    int iw = static_cast<int>((om - omega_lo) / omega_width());
    it = std::clamp(it, 0, n_theta - 1);
    iw = std::clamp(iw, 0, n_omega - 1);
    return index(it, iw);
}

GridMdp build_grid_mdp(const PendulumParams& params, int n_theta, int n_omega) {
    params.validate();
    GridMdp g;
    g.params = params;
    g.grid = GridSpec{n_theta, n_omega, -M_PI, M_PI, -params.omega_max,
                      params.omega_max};
    const int n = g.grid.cells();
    const int m = params.torque_levels;
    g.mdp.n = n;
    g.mdp.m = m;
    g.mdp.next.resize(n * m);
    g.mdp.unsafe.resize(n);
    const double half_w = 0.5 * g.grid.theta_width();
    for (int cell = 0; cell < n; ++cell) {
        const PendulumState c = g.grid.center(cell);
        // Cell is unsafe if its closed theta-range intersects the failure set.
        g.mdp.unsafe[cell] =
            (std::abs(c.theta) + half_w >= params.theta_limit) ? 1 : 0;
        for (int a = 0; a < m; ++a)
            g.mdp.next[cell * m + a] = g.grid.cell_of(pendulum_step(params, c, a));
    }
    return g;
}

GridOracle grid_oracle_pendulum(const PendulumParams& params, int resolution) {
    return grid_oracle_pendulum(params, resolution, resolution);
}

GridOracle grid_oracle_pendulum(const PendulumParams& params, int n_theta,
                                int n_omega) {
    if (n_theta < 51 || n_omega < 51)
        throw std::invalid_argument("grid oracle: resolution must be >= 51 per axis");
    GridOracle oracle;
    oracle.grid = build_grid_mdp(params, n_theta, n_omega);
    oracle.b_star = optimal_b_star(oracle.grid.mdp);
    oracle.safe = safe_set_of(oracle.b_star);
    return oracle;
}

SafeSetMask reach_avoid_set(const GridOracle& oracle,
                            const std::vector<int>& initial_cells) {
    const FiniteMdp& mdp = oracle.grid.mdp;
    SafeSetMask mask{mdp.n, mdp.m, std::vector<std::uint8_t>(mdp.n, 0),
                     std::vector<std::uint8_t>(mdp.n * mdp.m, 0)};
    std::deque<int> queue;
    for (int c : initial_cells)
        if (oracle.safe.state_safe[c] && !mask.state_safe[c]) {
            mask.state_safe[c] = 1;
            queue.push_back(c);
        }
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (int a = 0; a < mdp.m; ++a) {
            if (oracle.b_star.at(s, a) != 0) continue;
            mask.action_safe[s * mdp.m + a] = 1;
            const int nxt = mdp.successor(s, a);
            if (!mask.state_safe[nxt]) {
                mask.state_safe[nxt] = 1;
                queue.push_back(nxt);
            }
        }
    }
    return mask;
}

void write_mask_csv(const SafeSetMask& mask, const GridSpec& grid,
                    std::ostream& out) {
    out << "theta_index,omega_index";
    for (int a = 0; a < mask.m; ++a) out << ",action_" << a;
    out << ",state_safe\n";
    for (int it = 0; it < grid.n_theta; ++it)
        for (int iw = 0; iw < grid.n_omega; ++iw) {
            const int cell = grid.index(it, iw);
            out << it << "," << iw;
            for (int a = 0; a < mask.m; ++a)
                out << "," << int(mask.action_at(cell, a));
            out << "," << int(mask.state_safe[cell]) << "\n";
        }
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string pendulum_params_fingerprint(const PendulumParams& p) {
    std::ostringstream os;
    os.precision(17);
    os << p.gravity << "|" << p.mass << "|" << p.length << "|" << p.dt << "|"
       << p.max_torque << "|" << p.torque_levels << "|" << p.omega_max << "|"
       << p.theta_limit;
    std::ostringstream hex;
    hex << std::hex << fnv1a_hash(os.str());
    return hex.str();
}

void write_mask_header_json(const GridOracle& oracle, std::ostream& out) {
    const GridSpec& g = oracle.grid.grid;
    out.precision(17);
    out << "{\"schema_version\":1,"
        << "\"resolution\":[" << g.n_theta << "," << g.n_omega << "]"
        << ",\"n_theta\":" << g.n_theta << ",\"n_omega\":" << g.n_omega
        << ",\"theta_bounds\":[" << g.theta_lo << "," << g.theta_hi << "]"
        << ",\"omega_bounds\":[" << g.omega_lo << "," << g.omega_hi << "]"
        << ",\"params_hash\":\"" << pendulum_params_fingerprint(oracle.grid.params)
        << "\"}\n";
}

}  // namespace b2e
