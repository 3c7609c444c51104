#ifndef B2E_PENDULUM_HPP
#define B2E_PENDULUM_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace b2e {

/// Discrete-torque inverted pendulum. The failure region is everything at or
/// past the horizontal, |theta| >= theta_limit.
struct PendulumParams {
    double gravity = 10.0;      // m/s^2
    double mass = 1.0;          // kg
    double length = 1.0;        // m
    double dt = 0.05;           // s
    double max_torque = 2.0;    // N*m
    int torque_levels = 5;      // equally spaced on [-max_torque, max_torque]
    double omega_max = 8.0;     // rad/s, velocity clamp
    double theta_limit = M_PI / 2.0;  // rad, failure boundary (closed)

    double torque(int action_index) const;
    void validate() const;  // throws std::invalid_argument
};

struct PendulumState {
    double theta = 0.0;  // rad, angle from upright, wrapped to [-pi, pi)
    double omega = 0.0;  // rad/s, clamped to [-omega_max, omega_max]
};

/// Wrap an angle into [-pi, pi).
double wrap_angle(double theta);

/// Semi-implicit Euler step. Total and deterministic.
PendulumState pendulum_step(const PendulumParams& p, const PendulumState& s,
                            int action_index);

/// Insecurity signal: 1 iff |theta| >= theta_limit (boundary included).
inline int pendulum_insecurity(const PendulumParams& p, const PendulumState& s) {
    return std::abs(s.theta) >= p.theta_limit ? 1 : 0;
}

/// Observation encoding fed to neural critics: (cos theta, sin theta, omega).
inline std::array<double, 3> observe(const PendulumState& s) {
    return {std::cos(s.theta), std::sin(s.theta), s.omega};
}

/// Signed distance to the failure set, h(s) = pi/2 - |theta|.
/// h(s) <= 0 exactly where the insecurity signal is 1.
inline double signed_distance(const PendulumParams& p, const PendulumState& s) {
    return p.theta_limit - std::abs(s.theta);
}

}  // namespace b2e

#endif
