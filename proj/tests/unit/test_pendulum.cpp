#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "b2e/pendulum.hpp"

using namespace b2e;

TEST_CASE("torque grid is equally spaced on [-max, max]") {
    PendulumParams p;
    CHECK(p.torque(0) == doctest::Approx(-2.0));
    CHECK(p.torque(1) == doctest::Approx(-1.0));
    CHECK(p.torque(2) == doctest::Approx(0.0));
    CHECK(p.torque(3) == doctest::Approx(1.0));
    CHECK(p.torque(4) == doctest::Approx(2.0));
}

TEST_CASE("params validation rejects bad fields") {
    PendulumParams p;
    p.dt = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = PendulumParams{};
    p.torque_levels = 1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    CHECK_NOTHROW(PendulumParams{}.validate());
}

TEST_CASE("upright equilibrium with zero torque is a fixed point") {
    PendulumParams p;
    const PendulumState next = pendulum_step(p, {0.0, 0.0}, 2);  // torque 0
    CHECK(next.theta == 0.0);
    CHECK(next.omega == 0.0);
}

TEST_CASE("positive max torque from rest pushes theta and omega positive") {
    PendulumParams p;
    const PendulumState next = pendulum_step(p, {0.0, 0.0}, 4);  // torque +2
    CHECK(next.omega > 0.0);
    CHECK(next.theta > 0.0);
}

TEST_CASE("semi-implicit Euler step matches the hand-evaluated update") {
    // theta=0.1, omega=0.5, torque=-2, g=10, m=1, l=1, dt=0.05:
    //   omega' = 0.5 + (15*sin(0.1) - 6)*0.05
    //   theta' = 0.1 + omega'*0.05
    PendulumParams p;
    const PendulumState next = pendulum_step(p, {0.1, 0.5}, 0);
    CHECK(next.omega == doctest::Approx(0.27487506248512106).epsilon(1e-14));
    CHECK(next.theta == doctest::Approx(0.11374375312425605).epsilon(1e-14));
}

TEST_CASE("insecurity signal: closed boundary at pi/2") {
    PendulumParams p;
    CHECK(pendulum_insecurity(p, {0.0, 0.0}) == 0);
    CHECK(pendulum_insecurity(p, {M_PI / 2.0, 0.0}) == 1);
    CHECK(pendulum_insecurity(p, {-M_PI / 2.0, 3.0}) == 1);
    CHECK(pendulum_insecurity(p, {-1.6, -7.0}) == 1);
    CHECK(pendulum_insecurity(p, {1.5, 8.0}) == 0);
}

TEST_CASE("signed distance agrees with the insecurity signal") {
    PendulumParams p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> th(-M_PI, M_PI);
    std::uniform_real_distribution<double> om(-8.0, 8.0);
    for (int k = 0; k < 500; ++k) {
        const PendulumState s{th(rng), om(rng)};
        const bool unsafe = pendulum_insecurity(p, s) == 1;
        CHECK((signed_distance(p, s) <= 0.0) == unsafe);
    }
}

TEST_CASE("observation encoding is (cos theta, sin theta, omega)") {
    const auto o = observe({0.3, -1.25});
    CHECK(o[0] == doctest::Approx(std::cos(0.3)));
    CHECK(o[1] == doctest::Approx(std::sin(0.3)));
    CHECK(o[2] == -1.25);
}

TEST_CASE("wrap_angle maps into [-pi, pi)") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(M_PI) == doctest::Approx(-M_PI));
    CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(-M_PI));
    CHECK(wrap_angle(-M_PI) == doctest::Approx(-M_PI));
    CHECK(wrap_angle(2.5) == doctest::Approx(2.5));
    CHECK(wrap_angle(-9.0) == doctest::Approx(-9.0 + 2.0 * M_PI));
}

TEST_CASE("every step output satisfies the wrap/clamp closure") {
    PendulumParams p;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> th(-10.0, 10.0);
    std::uniform_real_distribution<double> om(-8.0, 8.0);
    std::uniform_int_distribution<int> act(0, p.torque_levels - 1);
    for (int k = 0; k < 2000; ++k) {
        const PendulumState s{wrap_angle(th(rng)), om(rng)};
        const PendulumState nxt = pendulum_step(p, s, act(rng));
        CHECK(nxt.theta >= -M_PI);
        CHECK(nxt.theta < M_PI);
        CHECK(std::abs(nxt.omega) <= p.omega_max);
    }
}

TEST_CASE("pendulum step is bit-identical across repeated evaluation") {
    PendulumParams p;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> th(-M_PI, M_PI);
    std::uniform_real_distribution<double> om(-8.0, 8.0);
    std::uniform_int_distribution<int> act(0, 4);
    for (int k = 0; k < 200; ++k) {
        const PendulumState s{th(rng), om(rng)};
        const int a = act(rng);
        const PendulumState x = pendulum_step(p, s, a);
        const PendulumState y = pendulum_step(p, s, a);
        CHECK(x.theta == y.theta);
        CHECK(x.omega == y.omega);
    }
}

TEST_CASE("omega clamp engages at high velocity") {
    PendulumParams p;
    const PendulumState next = pendulum_step(p, {0.4, 7.9}, 4);
    CHECK(next.omega == p.omega_max);
}
