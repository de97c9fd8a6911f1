#pragma once

#include <cstdint>
#include <vector>

#include "vqrl/autodiff/tensor.hpp"

namespace vqrl::ad {

struct AdamConfig {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment estimates for one parameter list. Slot i belongs to params[i] of
/// every adam_step call, so the parameter list must keep its order.
struct AdamState {
    explicit AdamState(AdamConfig config = {}) : config(config) {}

    AdamConfig config;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t t = 0;
};

/// In-place bias-corrected Adam update. Gradients are left untouched.
void adam_step(std::vector<Tensor>& params, AdamState& state);

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

void zero_grads(std::vector<Tensor>& params);

}  // namespace vqrl::ad
