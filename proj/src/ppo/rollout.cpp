#include "vqrl/ppo/rollout.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vqrl::ppo {
namespace {

ad::Tensor stack_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return ad::Tensor::from({rows.size(), cols}, std::move(flat));
}

double state_value(const policy::PolicyBundle& bundle, const std::vector<double>& obs) {
    ad::Graph g(ad::GradMode::Disabled);
    return bundle.value(g, bundle.extract_features(g, ad::Tensor::row(obs))).item();
}

}  // namespace

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                const std::vector<bool>& dones, double bootstrap_value, double gamma,
                                double lambda) {
    const std::size_t n = rewards.size();
    if (values.size() != n || dones.size() != n) {
        throw std::invalid_argument("compute_gae: rewards, values and dones differ in length");
    }
    std::vector<double> adv(n, 0.0);
    double running = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const double next_value = t + 1 < n ? values[t + 1] : bootstrap_value;
        const double nonterminal = dones[t] ? 0.0 : 1.0;
        const double delta = rewards[t] + gamma * next_value * nonterminal - values[t];
        running = delta + gamma * lambda * nonterminal * running;
        adv[t] = running;
    }
    return adv;
}

void normalize_advantages(std::vector<double>& advantages) {
    if (advantages.empty()) {
        return;
    }
    const double n = static_cast<double>(advantages.size());
    double mean = 0.0;
    for (double a : advantages) {
        mean += a;
    }
    mean /= n;
    double var = 0.0;
    for (double a : advantages) {
        var += (a - mean) * (a - mean);
    }
    const double std = std::sqrt(var / n);
    for (double& a : advantages) {
        a = (a - mean) / (std + 1e-8);
    }
}

Minibatch make_minibatch(const RolloutBatch& batch, std::span<const std::size_t> indices) {
    const std::size_t d = batch.observation_size;
    std::vector<double> obs;
    obs.reserve(indices.size() * d);
    Minibatch mb;
    for (std::size_t i : indices) {
        obs.insert(obs.end(), batch.observations.begin() + static_cast<std::ptrdiff_t>(i * d),
                   batch.observations.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        mb.actions.push_back(batch.actions[i]);
        mb.old_log_probs.push_back(batch.old_log_probs[i]);
        mb.advantages.push_back(batch.advantages[i]);
        mb.returns.push_back(batch.returns[i]);
    }
    mb.observations = ad::Tensor::from({indices.size(), d}, std::move(obs));
    return mb;
}

RolloutCollector::RolloutCollector(std::vector<env::EnvironmentPtr> envs) : envs_(std::move(envs)) {
    if (envs_.empty()) {
        throw std::invalid_argument("rollout collector needs at least one environment");
    }
    for (auto& e : envs_) {
        current_.push_back(e->reset());
    }
    running_return_.assign(envs_.size(), 0.0);
}

RolloutBatch RolloutCollector::collect(const policy::PolicyBundle& bundle, std::size_t steps, double gamma,
                                       double lambda, std::mt19937_64& rng) {
    const std::size_t w_count = envs_.size();
    RolloutBatch b;
    b.steps = steps;
    b.workers = w_count;
    b.observation_size = current_.front().size();
    const std::size_t n = steps * w_count;
    b.observations.reserve(n * b.observation_size);
    b.actions.resize(n);
    b.rewards.resize(n);
    b.dones.resize(n);
    b.old_log_probs.resize(n);
    b.old_values.resize(n);

    for (std::size_t t = 0; t < steps; ++t) {
        const auto samples = policy::act(bundle, stack_rows(current_), &rng);
        for (std::size_t w = 0; w < w_count; ++w) {
            const std::size_t idx = t * w_count + w;
            b.observations.insert(b.observations.end(), current_[w].begin(), current_[w].end());
            b.actions[idx] = samples[w].action;
            b.old_log_probs[idx] = samples[w].log_prob;
            b.old_values[idx] = samples[w].value;

            env::StepResult r;
            try {
                r = envs_[w]->step(samples[w].action);
            } catch (const std::exception& e) {
                throw std::runtime_error("worker " + std::to_string(w) + ": " + e.what());
            }
            running_return_[w] += r.reward;
            double reward = r.reward;
            if (r.truncated) {
                reward += gamma * state_value(bundle, r.observation);
            }
            b.rewards[idx] = reward;
            b.dones[idx] = r.done();
            if (r.done()) {
                b.episode_returns.push_back(running_return_[w]);
                running_return_[w] = 0.0;
                current_[w] = envs_[w]->reset();
            } else {
                current_[w] = std::move(r.observation);
            }
        }
    }

    std::vector<double> bootstrap(w_count);
    {
        ad::Graph g(ad::GradMode::Disabled);
        const ad::Tensor v = bundle.value(g, bundle.extract_features(g, stack_rows(current_)));
        for (std::size_t w = 0; w < w_count; ++w) {
            bootstrap[w] = v.at(w);
        }
    }

    b.advantages.resize(n);
    b.returns.resize(n);
    for (std::size_t w = 0; w < w_count; ++w) {
        std::vector<double> rewards(steps);
        std::vector<double> values(steps);
        std::vector<bool> dones(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            rewards[t] = b.rewards[t * w_count + w];
            values[t] = b.old_values[t * w_count + w];
            dones[t] = b.dones[t * w_count + w];
        }
        const auto adv = compute_gae(rewards, values, dones, bootstrap[w], gamma, lambda);
        for (std::size_t t = 0; t < steps; ++t) {
            b.advantages[t * w_count + w] = adv[t];
            b.returns[t * w_count + w] = adv[t] + values[t];
        }
    }
    return b;
}

}  // namespace vqrl::ppo
