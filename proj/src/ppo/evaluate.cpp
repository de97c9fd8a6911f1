#include "vqrl/ppo/evaluate.hpp"

#include <cmath>

#include "vqrl/ppo/seeds.hpp"

namespace vqrl::ppo {

std::vector<double> evaluate(const policy::PolicyBundle& bundle, const env::EnvConfig& config,
                             std::size_t episodes, EvalSeeds seeds) {
    std::vector<env::EnvironmentPtr> envs;
    std::vector<std::vector<double>> obs;
    envs.reserve(episodes);
    for (std::size_t i = 0; i < episodes; ++i) {
        envs.push_back(env::make_environment(config, derive_seed(seeds.env, i), derive_seed(seeds.noise, i)));
        obs.push_back(envs.back()->reset());
    }
    std::vector<double> returns(episodes, 0.0);
    std::vector<std::size_t> live(episodes);
    for (std::size_t i = 0; i < episodes; ++i) {
        live[i] = i;
    }

    const std::size_t d = config.observation_size();
    while (!live.empty()) {
        std::vector<double> flat;
        flat.reserve(live.size() * d);
        for (std::size_t i : live) {
            flat.insert(flat.end(), obs[i].begin(), obs[i].end());
        }
        const auto samples = policy::act(bundle, ad::Tensor::from({live.size(), d}, std::move(flat)), nullptr);
        std::vector<std::size_t> still;
        for (std::size_t j = 0; j < live.size(); ++j) {
            const std::size_t i = live[j];
            auto r = envs[i]->step(samples[j].action);
            returns[i] += r.reward;
            if (!r.done()) {
                obs[i] = std::move(r.observation);
                still.push_back(i);
            }
        }
        live = std::move(still);
    }
    return returns;
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return s / static_cast<double>(values.size());
}

double std_of(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    const double m = mean_of(values);
    double s = 0.0;
    for (double v : values) {
        s += (v - m) * (v - m);
    }
    return std::sqrt(s / static_cast<double>(values.size()));
}

}  // namespace vqrl::ppo
