#include "b2e/finite_mdp.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace b2e {

void FiniteMdp::validate() const {
    if (n <= 0 || m <= 0)
        throw std::invalid_argument("finite mdp: n and m must be positive");
    if (static_cast<int>(next.size()) != n * m)
        throw std::invalid_argument("finite mdp: successor table has wrong size");
    if (static_cast<int>(unsafe.size()) != n)
        throw std::invalid_argument("finite mdp: insecurity vector has wrong size");
    for (int v : next)
        if (v < 0 || v >= n)
            throw std::invalid_argument("finite mdp: successor index out of range");
    for (auto b : unsafe)
        if (b > 1)
            throw std::invalid_argument("finite mdp: insecurity bits must be 0/1");
}

std::vector<int> FinitePolicy::support(int s) const {
    std::vector<int> acts;
    for (int a = 0; a < m; ++a)
        if (at(s, a) > 0.0) acts.push_back(a);
    return acts;
}

FinitePolicy FinitePolicy::deterministic(const FiniteMdp& mdp,
                                         const std::vector<int>& action_of_state) {
    FinitePolicy p{mdp.n, mdp.m, std::vector<double>(mdp.n * mdp.m, 0.0)};
    for (int s = 0; s < mdp.n; ++s) p.prob[s * mdp.m + action_of_state[s]] = 1.0;
    return p;
}

FinitePolicy FinitePolicy::uniform(const FiniteMdp& mdp) {
    return FinitePolicy{mdp.n, mdp.m,
                        std::vector<double>(mdp.n * mdp.m, 1.0 / mdp.m)};
}

std::set<int> reachable_set(const FiniteMdp& mdp, const FinitePolicy& policy,
                            int s0, int t) {
    std::set<int> layer{s0};
    for (int k = 0; k < t; ++k) {
        std::set<int> nxt;
        for (int s : layer)
            for (int a : policy.support(s)) nxt.insert(mdp.successor(s, a));
        layer = std::move(nxt);
    }
    return layer;
}

std::set<int> reachable_set_sa(const FiniteMdp& mdp, const FinitePolicy& policy,
                               int s0, int a0, int t) {
    if (t == 0) return {s0};
    return reachable_set(mdp, policy, mdp.successor(s0, a0), t - 1);
}

namespace {
std::istream& strip_comments(std::istream& in, std::string& token) {
    while (in >> token) {
        if (token[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        return in;
    }
    return in;
}

long next_int(std::istream& in) {
    std::string token;
    if (!strip_comments(in, token))
        throw std::invalid_argument("finite mdp file: unexpected end of input");
    try {
        return std::stol(token);
    } catch (const std::exception&) {
        throw std::invalid_argument("finite mdp file: bad token '" + token + "'");
    }
}
}  // namespace

FiniteMdp load_finite_mdp(std::istream& in) {
    FiniteMdp mdp;
    mdp.n = static_cast<int>(next_int(in));
    mdp.m = static_cast<int>(next_int(in));
    if (mdp.n <= 0 || mdp.m <= 0)
        throw std::invalid_argument("finite mdp file: n and m must be positive");
    mdp.next.resize(mdp.n * mdp.m);
    for (auto& v : mdp.next) v = static_cast<int>(next_int(in));
    mdp.unsafe.resize(mdp.n);
    for (auto& b : mdp.unsafe) b = static_cast<std::uint8_t>(next_int(in));
    mdp.validate();
    return mdp;
}

FiniteMdp load_finite_mdp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mdp file: " + path);
    return load_finite_mdp(in);
}

void save_finite_mdp(const FiniteMdp& mdp, std::ostream& out) {
    out << mdp.n << " " << mdp.m << "\n";
    for (int s = 0; s < mdp.n; ++s) {
        for (int a = 0; a < mdp.m; ++a)
            out << mdp.successor(s, a) << (a + 1 == mdp.m ? "\n" : " ");
    }
    for (int s = 0; s < mdp.n; ++s)
        out << int(mdp.unsafe[s]) << (s + 1 == mdp.n ? "\n" : " ");
}

}  // namespace b2e
