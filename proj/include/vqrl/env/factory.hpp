#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vqrl/env/cartpole.hpp"
#include "vqrl/env/environment.hpp"
#include "vqrl/env/minigrid.hpp"

namespace vqrl::env {

enum class Domain { CartPole, GenCartPole, MiniGrid, GenMiniGrid };

Domain parse_domain(const std::string& name);
std::string domain_name(Domain domain);
bool is_cartpole(Domain domain);

enum class NoiseMode { None, Gaussian, Attack };

NoiseMode parse_noise_mode(const std::string& name);
std::string noise_mode_name(NoiseMode mode);

struct NoiseConfig {
    NoiseMode mode = NoiseMode::None;
    double delta = std::numeric_limits<double>::infinity();
    double attack_prob = 0.0;
};

/// (m_c, m_p, l) triple.
using PhysicsTriple = std::array<double, 3>;

struct EnvConfig {
    Domain domain = Domain::CartPole;
    /// Empty selects the domain default: the classic physics for cartpole,
    /// the three training triples for gen-cartpole.
    std::vector<PhysicsTriple> params_set;
    NoiseConfig noise;
    /// "train" or "test" for gen-minigrid.
    std::string goal_split = "train";
    GoalSplit goals = GoalSplit::standard();
    /// Pins every episode to one goal cell (per-cell evaluation).
    std::optional<GridPos> fixed_goal;

    std::size_t observation_size() const;
    std::size_t action_count() const;
};

std::vector<CartPoleParams> resolve_params(const EnvConfig& config);

/// Builds the environment stack: base dynamics, optional observation noise,
/// then FoV scaling for the grid domains. Initial states draw from `seed`,
/// noise from `noise_seed`.
EnvironmentPtr make_environment(const EnvConfig& config, std::uint64_t seed, std::uint64_t noise_seed);

}  // namespace vqrl::env
