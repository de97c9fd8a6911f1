#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "vqrl/env/factory.hpp"
#include "vqrl/policy/policy_net.hpp"

namespace vqrl::analysis {

/// Sampling box for CartPole states. Position and angle come from the
/// termination thresholds; the velocity bounds are a choice.
struct StateBounds {
    double x = 2.4;
    double x_dot = 3.0;
    double theta = 12.0 * std::numbers::pi / 180.0;
    double theta_dot = 3.0;
};

struct SampledState {
    /// Interpretable components: (x, x_dot, theta, theta_dot) for CartPole,
    /// (agent_col, agent_row, orientation, goal_col, goal_row) for MiniGrid.
    std::vector<double> components;
    /// What the network sees (frame-stacked / scaled FoV).
    std::vector<double> observation;
};

std::vector<std::string> component_names(env::Domain domain);

/// Uniform states: CartPole inside `bounds` (repeated four times for the
/// frame-stacked domain); MiniGrid over legal (position, orientation, goal)
/// with the goal drawn from the configured goal list and the agent never on
/// the goal.
std::vector<SampledState> sample_states(const env::EnvConfig& config, std::size_t n, std::uint64_t seed,
                                        const StateBounds& bounds = {});

/// States visited by the sampled policy from reset, recorded every step until
/// `n` are collected.
std::vector<SampledState> sample_trajectory_states(const policy::PolicyBundle& bundle, const env::EnvConfig& config,
                                                   std::size_t n, std::uint64_t seed);

}  // namespace vqrl::analysis
