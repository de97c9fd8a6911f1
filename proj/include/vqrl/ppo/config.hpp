#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "vqrl/vq/codebook.hpp"

namespace vqrl::ppo {

enum class Variant { Ppo, VqPpo, VqPpoReg };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant variant);

/// Training hyper-parameters. None of the defaults come from published
/// tables; they are ordinary PPO settings.
struct TrainConfig {
    Variant variant = Variant::VqPpoReg;

    double lambda_vq_enc = 1.0;
    double lambda_class = 0.5;
    vq::VQHyper vq;
    std::size_t codebook_size = 8;
    /// D; 0 picks 16 for CartPole domains and 32 for grid domains.
    std::size_t feature_size = 0;
    std::size_t hidden = 64;

    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip = 0.2;
    int epochs = 10;
    std::size_t minibatch = 64;
    std::size_t workers = 8;
    std::size_t steps_per_worker = 128;
    std::int64_t total_timesteps = 300'000;
    std::uint64_t seed = 1;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double learning_rate = 3e-4;
    double max_grad_norm = 0.5;
    /// Linearly decay the learning rate to zero over total_timesteps.
    bool anneal_lr = true;

    /// Evaluate every N updates (0 disables periodic evaluation).
    std::size_t eval_every = 5;
    std::size_t eval_episodes = 20;
    /// Write ckpt_<step>.json every N updates (0 disables).
    std::size_t checkpoint_every = 0;
    /// Return the best-evaluated parameters instead of the last ones.
    bool keep_best = true;
    /// Stop once a periodic evaluation reaches this mean return.
    double stop_at_return = 0.0;

    bool uses_vq() const { return variant != Variant::Ppo; }
    /// Zeroes the weights a variant does not use: ppo drops both auxiliary
    /// terms, vq-ppo drops the codebook regularizer.
    TrainConfig resolved() const;
    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

}  // namespace vqrl::ppo
