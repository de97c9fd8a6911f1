#include "vqrl/ppo/config.hpp"

#include <cmath>
#include <stdexcept>

namespace vqrl::ppo {

Variant parse_variant(const std::string& name) {
    if (name == "ppo") {
        return Variant::Ppo;
    }
    if (name == "vq-ppo") {
        return Variant::VqPpo;
    }
    if (name == "vq-ppo-reg") {
        return Variant::VqPpoReg;
    }
    throw std::invalid_argument("unknown variant '" + name + "' (expected ppo, vq-ppo or vq-ppo-reg)");
}

std::string variant_name(Variant variant) {
    switch (variant) {
    case Variant::Ppo:
        return "ppo";
    case Variant::VqPpo:
        return "vq-ppo";
    case Variant::VqPpoReg:
        return "vq-ppo-reg";
    }
    return "unknown";
}

TrainConfig TrainConfig::resolved() const {
    TrainConfig out = *this;
    if (variant == Variant::Ppo) {
        out.lambda_vq_enc = 0.0;
        out.lambda_class = 0.0;
        out.vq.lambda_reg = 0.0;
    } else if (variant == Variant::VqPpo) {
        out.vq.lambda_reg = 0.0;
    }
    return out;
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw std::invalid_argument("invalid train config: " + what);
        }
    };
    auto finite_nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
    require(finite_nonneg(lambda_vq_enc), "lambda_vq_enc must be finite and >= 0");
    require(finite_nonneg(lambda_class), "lambda_class must be finite and >= 0");
    require(finite_nonneg(vq.beta), "vq.beta must be finite and >= 0");
    require(finite_nonneg(vq.repulsion), "vq.repulsion must be finite and >= 0");
    require(finite_nonneg(vq.lambda_reg), "vq.lambda_reg must be finite and >= 0");
    require(codebook_size >= 2, "codebook_size must be >= 2");
    require(hidden >= 1, "hidden must be >= 1");
    require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
    require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must be in [0, 1]");
    require(clip > 0.0 && clip < 1.0, "clip must be in (0, 1)");
    require(epochs >= 1, "epochs must be >= 1");
    require(workers >= 1 && steps_per_worker >= 1, "workers and steps_per_worker must be >= 1");
    require(minibatch >= 1 && minibatch <= workers * steps_per_worker,
            "minibatch must be in [1, workers * steps_per_worker]");
    require(total_timesteps >= 1, "total_timesteps must be >= 1");
    require(finite_nonneg(entropy_coef) && finite_nonneg(value_coef), "loss coefficients must be >= 0");
    require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be > 0");
    require(std::isfinite(max_grad_norm) && max_grad_norm >= 0.0, "max_grad_norm must be >= 0 (0 disables)");
    require(eval_episodes >= 1, "eval_episodes must be >= 1");
    if (variant == Variant::Ppo) {
        require(lambda_vq_enc == 0.0 && lambda_class == 0.0,
                "variant ppo requires lambda_vq_enc = lambda_class = 0 (use resolved())");
    }
    if (variant == Variant::VqPpo) {
        require(vq.lambda_reg == 0.0, "variant vq-ppo requires vq.lambda_reg = 0 (use resolved())");
    }
}

}  // namespace vqrl::ppo
