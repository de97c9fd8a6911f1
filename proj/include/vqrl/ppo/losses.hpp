#pragma once

#include <vector>

#include "vqrl/autodiff/graph.hpp"
#include "vqrl/policy/model.hpp"
#include "vqrl/ppo/config.hpp"
#include "vqrl/ppo/rollout.hpp"

namespace vqrl::ppo {

struct PpoTerms {
    ad::Tensor total;       ///< surrogate + c_v * value_mse - c_e * entropy
    ad::Tensor surrogate;   ///< -mean(min(r A, clip(r) A))
    ad::Tensor value_mse;
    ad::Tensor entropy;
};

/// Clipped PPO objective from already computed heads.
PpoTerms ppo_loss_from_heads(ad::Graph& g, const ad::Tensor& logits, const ad::Tensor& values,
                             const Minibatch& mb, const TrainConfig& config);

PpoTerms ppo_loss(ad::Graph& g, const Minibatch& mb, const policy::PolicyBundle& bundle,
                  const TrainConfig& config);

/// Scalar values of every component, for logging.
struct LossBreakdown {
    double rl = 0.0;
    double vq_enc = 0.0;       ///< mean codebook + commitment terms plus lambda_reg * reg
    double commitment = 0.0;   ///< mean ||sg[e] - f||^2
    double d1 = 0.0;
    double d2 = 0.0;
    double cls = 0.0;
    double total = 0.0;
    std::vector<std::size_t> assignments;
};

/// L_rl + lambda_vq_enc * L_vq-enc + lambda_class * L_class, quantizing the
/// minibatch with the current codebook. The plain ppo variant skips the
/// auxiliary branch entirely.
ad::Tensor total_loss(ad::Graph& g, const Minibatch& mb, const policy::Model& model, const TrainConfig& config,
                      LossBreakdown* breakdown = nullptr);

}  // namespace vqrl::ppo
