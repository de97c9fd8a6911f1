#include "vqrl/env/noise.hpp"

#include <stdexcept>

namespace vqrl::env {

std::vector<double> gaussian_noise(std::span<const double> obs, double delta, std::mt19937_64& rng) {
    if (!(delta > 0.0)) {
        throw std::invalid_argument("gaussian_noise: delta must be positive");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out(obs.begin(), obs.end());
    for (double& v : out) {
        v += normal(rng) / delta;
    }
    return out;
}

FovObservation attack_noise(const FovObservation& fov, double attack_prob, std::mt19937_64& rng) {
    if (!(attack_prob >= 0.0 && attack_prob <= 1.0)) {
        throw std::invalid_argument("attack_noise: probability must lie in [0, 1]");
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> object(0, kFovChannelMax[0]);
    std::uniform_int_distribution<int> color(0, kFovChannelMax[1]);
    std::uniform_int_distribution<int> bit(0, kFovChannelMax[2]);
    FovObservation out = fov;
    for (std::size_t cell = 0; cell < kFovCells; ++cell) {
        if (coin(rng) < attack_prob) {
            out[cell * 3] = static_cast<std::uint8_t>(object(rng));
            out[cell * 3 + 1] = static_cast<std::uint8_t>(color(rng));
            out[cell * 3 + 2] = static_cast<std::uint8_t>(bit(rng));
        }
    }
    return out;
}

GaussianObservationNoise::GaussianObservationNoise(EnvironmentPtr inner, double delta, std::uint64_t seed)
    : inner_(std::move(inner)), delta_(delta), rng_(seed) {
    if (!(delta_ > 0.0)) {
        throw std::invalid_argument("gaussian noise: delta must be positive");
    }
}

std::vector<double> GaussianObservationNoise::reset() { return gaussian_noise(inner_->reset(), delta_, rng_); }

StepResult GaussianObservationNoise::step(std::size_t action) {
    StepResult r = inner_->step(action);
    r.observation = gaussian_noise(r.observation, delta_, rng_);
    return r;
}

FovAttackNoise::FovAttackNoise(EnvironmentPtr inner, double attack_prob, std::uint64_t seed)
    : inner_(std::move(inner)), attack_prob_(attack_prob), rng_(seed) {
    if (inner_->observation_size() != kFovSize) {
        throw std::invalid_argument("attack noise needs a raw FoV observation");
    }
    if (!(attack_prob_ >= 0.0 && attack_prob_ <= 1.0)) {
        throw std::invalid_argument("attack noise: probability must lie in [0, 1]");
    }
}

std::vector<double> FovAttackNoise::corrupt(const std::vector<double>& raw) {
    return fov_to_values(attack_noise(fov_from_values(raw), attack_prob_, rng_));
}

std::vector<double> FovAttackNoise::reset() { return corrupt(inner_->reset()); }

StepResult FovAttackNoise::step(std::size_t action) {
    StepResult r = inner_->step(action);
    r.observation = corrupt(r.observation);
    return r;
}

FovScaling::FovScaling(EnvironmentPtr inner) : inner_(std::move(inner)) {
    if (inner_->observation_size() != kFovSize) {
        throw std::invalid_argument("fov scaling needs a raw FoV observation");
    }
}

StepResult FovScaling::step(std::size_t action) {
    StepResult r = inner_->step(action);
    r.observation = scale_fov(r.observation);
    return r;
}

}  // namespace vqrl::env
