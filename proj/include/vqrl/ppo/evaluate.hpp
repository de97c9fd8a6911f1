#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vqrl/env/factory.hpp"
#include "vqrl/policy/policy_net.hpp"

namespace vqrl::ppo {

struct EvalSeeds {
    std::uint64_t env = 0;    ///< initial states (and physics/goal draws)
    std::uint64_t noise = 0;  ///< observation noise
};

/// Runs `episodes` episodes with argmax actions and returns the undiscounted
/// return of each. Episode i uses derive_seed(seeds.env, i) and
/// derive_seed(seeds.noise, i), so results do not depend on how episodes are
/// batched. All live episodes advance together through one batched forward
/// pass per step.
std::vector<double> evaluate(const policy::PolicyBundle& bundle, const env::EnvConfig& config,
                             std::size_t episodes, EvalSeeds seeds);

double mean_of(const std::vector<double>& values);
/// Population standard deviation.
double std_of(const std::vector<double>& values);

}  // namespace vqrl::ppo
