#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <numbers>
#include <random>
#include <vector>

#include "vqrl/env/environment.hpp"

namespace vqrl::env {

/// Physical constants of the cart-pole system. `half_length` is half the
/// pole length, so (1.0, 0.1, 0.5) is the classic configuration.
struct CartPoleParams {
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double half_length = 0.5;
    double gravity = 9.8;
    double force = 10.0;
    double tau = 0.02;
    double theta_threshold = 12.0 * 2.0 * std::numbers::pi / 360.0;
    double x_threshold = 2.4;
    int max_steps = 500;

    static CartPoleParams with_masses(double cart_mass, double pole_mass, double half_length);
    void validate() const;
};

struct CartPoleState {
    double x = 0.0;
    double x_dot = 0.0;
    double theta = 0.0;
    double theta_dot = 0.0;

    std::array<double, 4> as_array() const { return {x, x_dot, theta, theta_dot}; }
};

enum class CartPoleAction : std::size_t { Left = 0, Right = 1 };

struct CartPoleTransition {
    CartPoleState next;
    double reward = 1.0;
    bool terminated = false;
};

/// One explicit-Euler step of the frictionless cart-pole equations. Throws on
/// an action other than 0 or 1.
CartPoleTransition cartpole_step(const CartPoleState& state, std::size_t action, const CartPoleParams& params);

bool cartpole_within_bounds(const CartPoleState& state, const CartPoleParams& params);

/// Angular acceleration produced by `action` from `state`.
double cartpole_angular_acceleration(const CartPoleState& state, std::size_t action,
                                     const CartPoleParams& params);

/// CartPole-v1 and its parameterized variant.
///
/// Each episode draws its physics uniformly from `param_set`. Observations are
/// the last `frame_stack` states, oldest first; the window is padded with the
/// initial state after reset.
class CartPoleEnv : public Environment {
public:
    CartPoleEnv(std::vector<CartPoleParams> param_set, std::size_t frame_stack, std::uint64_t seed);

    std::size_t observation_size() const override { return 4 * frame_stack_; }
    std::size_t action_count() const override { return 2; }
    std::vector<double> reset() override;
    StepResult step(std::size_t action) override;
    std::string name() const override { return frame_stack_ > 1 ? "gen-cartpole" : "cartpole"; }

    const CartPoleState& state() const { return state_; }
    const CartPoleParams& params() const { return params_; }
    int steps() const { return steps_; }

private:
    std::vector<double> observation() const;

    std::vector<CartPoleParams> param_set_;
    std::size_t frame_stack_;
    std::mt19937_64 rng_;
    CartPoleParams params_;
    CartPoleState state_;
    std::deque<CartPoleState> window_;
    int steps_ = 0;
    bool needs_reset_ = true;
};

/// Training physics of the parameterized task: (m_c, m_p, l) in
/// {(0.5, 0.05, 0.25), (1.0, 0.1, 0.5), (2, 0.2, 1)}.
std::vector<CartPoleParams> gen_cartpole_training_set();
/// Held-out physics, lightest to heaviest.
std::vector<CartPoleParams> gen_cartpole_test_set();

}  // namespace vqrl::env
