#include "b2e/pendulum.hpp"

#include <algorithm>
#include <stdexcept>

namespace b2e {

double PendulumParams::torque(int action_index) const {
    if (action_index < 0 || action_index >= torque_levels)
        throw std::out_of_range("torque index out of range");
    if (torque_levels == 1) return 0.0;
    const double step = 2.0 * max_torque / (torque_levels - 1);
    return -max_torque + step * action_index;
}

void PendulumParams::validate() const {
    if (dt <= 0.0) throw std::invalid_argument("pendulum: dt must be > 0");
    if (torque_levels < 2)
        throw std::invalid_argument("pendulum: torque_levels must be >= 2");
    if (mass <= 0.0 || length <= 0.0)
        throw std::invalid_argument("pendulum: mass and length must be > 0");
    if (omega_max <= 0.0)
        throw std::invalid_argument("pendulum: omega_max must be > 0");
}

double wrap_angle(double theta) {
    double t = std::fmod(theta + M_PI, 2.0 * M_PI);
    if (t < 0.0) t += 2.0 * M_PI;
    return t - M_PI;
}

PendulumState pendulum_step(const PendulumParams& p, const PendulumState& s,
                            int action_index) {
    const double a = p.torque(action_index);
    const double accel = 3.0 * p.gravity / (2.0 * p.length) * std::sin(s.theta) +
                         3.0 / (p.mass * p.length * p.length) * a;
    double omega = s.omega + accel * p.dt;
    omega = std::clamp(omega, -p.omega_max, p.omega_max);
    const double theta = wrap_angle(s.theta + omega * p.dt);
    return {theta, omega};
}

}  // namespace b2e
