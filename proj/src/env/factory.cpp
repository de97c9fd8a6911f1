#include "vqrl/env/factory.hpp"

#include <cmath>
#include <stdexcept>

#include "vqrl/env/noise.hpp"

namespace vqrl::env {

Domain parse_domain(const std::string& name) {
    if (name == "cartpole") return Domain::CartPole;
    if (name == "gen-cartpole") return Domain::GenCartPole;
    if (name == "minigrid") return Domain::MiniGrid;
    if (name == "gen-minigrid") return Domain::GenMiniGrid;
    throw std::invalid_argument("unknown environment '" + name + "'");
}

std::string domain_name(Domain domain) {
    switch (domain) {
        case Domain::CartPole:
            return "cartpole";
        case Domain::GenCartPole:
            return "gen-cartpole";
        case Domain::MiniGrid:
            return "minigrid";
        case Domain::GenMiniGrid:
            return "gen-minigrid";
    }
    return "unknown";
}

bool is_cartpole(Domain domain) { return domain == Domain::CartPole || domain == Domain::GenCartPole; }

NoiseMode parse_noise_mode(const std::string& name) {
    if (name == "none") return NoiseMode::None;
    if (name == "gaussian") return NoiseMode::Gaussian;
    if (name == "attack") return NoiseMode::Attack;
    throw std::invalid_argument("unknown noise mode '" + name + "'");
}

std::string noise_mode_name(NoiseMode mode) {
    switch (mode) {
        case NoiseMode::None:
            return "none";
        case NoiseMode::Gaussian:
            return "gaussian";
        case NoiseMode::Attack:
            return "attack";
    }
    return "unknown";
}

std::size_t EnvConfig::observation_size() const {
    switch (domain) {
        case Domain::CartPole:
            return 4;
        case Domain::GenCartPole:
            return 16;
        default:
            return kFovSize;
    }
}

std::size_t EnvConfig::action_count() const { return is_cartpole(domain) ? 2 : 3; }

std::vector<CartPoleParams> resolve_params(const EnvConfig& config) {
    if (config.params_set.empty()) {
        return config.domain == Domain::GenCartPole ? gen_cartpole_training_set()
                                                    : std::vector<CartPoleParams>{CartPoleParams{}};
    }
    std::vector<CartPoleParams> out;
    for (const auto& t : config.params_set) {
        out.push_back(CartPoleParams::with_masses(t[0], t[1], t[2]));
    }
    return out;
}

EnvironmentPtr make_environment(const EnvConfig& config, std::uint64_t seed, std::uint64_t noise_seed) {
    EnvironmentPtr env;
    if (is_cartpole(config.domain)) {
        const std::size_t stack = config.domain == Domain::GenCartPole ? 4 : 1;
        env = std::make_unique<CartPoleEnv>(resolve_params(config), stack, seed);
        if (config.noise.mode == NoiseMode::Attack) {
            throw std::invalid_argument("attack noise applies to grid observations only");
        }
        if (config.noise.mode == NoiseMode::Gaussian && std::isfinite(config.noise.delta)) {
            env = std::make_unique<GaussianObservationNoise>(std::move(env), config.noise.delta, noise_seed);
        }
        return env;
    }

    std::vector<GridPos> goals;
    GoalMode mode = GoalMode::Sample;
    if (config.fixed_goal) {
        goals = {*config.fixed_goal};
    } else if (config.domain == Domain::GenMiniGrid) {
        config.goals.validate();
        if (config.goal_split == "train") {
            goals = config.goals.train;
        } else if (config.goal_split == "test") {
            goals = config.goals.resolved_test();
            mode = GoalMode::Cycle;
        } else {
            throw std::invalid_argument("goal split must be 'train' or 'test', got '" + config.goal_split + "'");
        }
    } else {
        goals = {GridPos{kGridSize - 2, kGridSize - 2}};
    }
    env = std::make_unique<MiniGridEnv>(std::move(goals), mode, seed);
    if (config.noise.mode == NoiseMode::Gaussian) {
        throw std::invalid_argument("gaussian noise applies to cartpole observations only");
    }
    if (config.noise.mode == NoiseMode::Attack && config.noise.attack_prob > 0.0) {
        env = std::make_unique<FovAttackNoise>(std::move(env), config.noise.attack_prob, noise_seed);
    }
    return std::make_unique<FovScaling>(std::move(env));
}

}  // namespace vqrl::env
