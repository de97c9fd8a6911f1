#include "vqrl/autodiff/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vqrl::ad {

void adam_step(std::vector<Tensor>& params, AdamState& state) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].requires_grad() || params[i].grad().size() != params[i].size()) {
            throw std::invalid_argument("adam_step: parameter " + std::to_string(i) + " has no gradient");
        }
    }
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        throw std::invalid_argument("adam_step: parameter list changed between steps");
    }

    const auto& c = state.config;
    state.t += 1;
    const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
    const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto values = params[i].values();
        const auto grad = params[i].grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.size() != values.size()) {
            throw std::invalid_argument("adam_step: parameter " + std::to_string(i) + " changed size");
        }
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double g = grad[j];
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            values[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        for (double g : p.grad()) {
            sq += g * g;
        }
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double factor = max_norm / (norm + 1e-6);
        for (auto& p : params) {
            for (double& g : p.mutable_grad()) {
                g *= factor;
            }
        }
    }
    return norm;
}

void zero_grads(std::vector<Tensor>& params) {
    for (auto& p : params) {
        p.zero_grad();
    }
}

}  // namespace vqrl::ad
