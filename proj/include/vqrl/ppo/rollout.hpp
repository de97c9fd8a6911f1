#pragma once

#include <cstddef>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "vqrl/autodiff/tensor.hpp"
#include "vqrl/env/environment.hpp"
#include "vqrl/policy/policy_net.hpp"

namespace vqrl::ppo {

/// T steps x W workers, flattened with index t * W + w.
struct RolloutBatch {
    std::size_t steps = 0;
    std::size_t workers = 0;
    std::size_t observation_size = 0;
    std::vector<double> observations;
    std::vector<std::size_t> actions;
    /// Rewards include gamma * V(s_T) on time-limit truncation.
    std::vector<double> rewards;
    std::vector<bool> dones;
    std::vector<double> old_log_probs;
    std::vector<double> old_values;
    std::vector<double> advantages;
    std::vector<double> returns;
    /// Undiscounted returns of episodes that finished during collection.
    std::vector<double> episode_returns;

    std::size_t size() const { return steps * workers; }
};

/// GAE over one worker's trajectory. dones[t] marks that the episode ended
/// after step t; bootstrap_value is V of the observation following the last
/// step.
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                const std::vector<bool>& dones, double bootstrap_value, double gamma,
                                double lambda);

/// Rescales to zero mean and unit (population) standard deviation.
void normalize_advantages(std::vector<double>& advantages);

struct Minibatch {
    ad::Tensor observations;
    std::vector<std::size_t> actions;
    std::vector<double> old_log_probs;
    std::vector<double> advantages;
    std::vector<double> returns;
};

Minibatch make_minibatch(const RolloutBatch& batch, std::span<const std::size_t> indices);

/// Steps a fixed set of environments with the current policy, carrying
/// unfinished episodes over from one collection to the next.
class RolloutCollector {
public:
    explicit RolloutCollector(std::vector<env::EnvironmentPtr> envs);

    /// Collects `steps` transitions per worker and fills advantages and
    /// returns (unnormalized).
    RolloutBatch collect(const policy::PolicyBundle& bundle, std::size_t steps, double gamma, double lambda,
                         std::mt19937_64& rng);

    std::size_t workers() const { return envs_.size(); }

private:
    std::vector<env::EnvironmentPtr> envs_;
    std::vector<std::vector<double>> current_;
    std::vector<double> running_return_;
};

}  // namespace vqrl::ppo
