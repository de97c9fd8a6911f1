#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vqrl/env/environment.hpp"
#include "vqrl/env/minigrid.hpp"

namespace vqrl::env {

/// obs + z / delta with z ~ N(0, 1) i.i.d.
std::vector<double> gaussian_noise(std::span<const double> obs, double delta, std::mt19937_64& rng);

/// Each of the 49 cells is replaced with probability p by a uniformly random
/// (object id, colour, occupancy) triple from the valid ranges.
FovObservation attack_noise(const FovObservation& fov, double attack_prob, std::mt19937_64& rng);

/// Perturbs observations only; the wrapped environment evolves on its clean
/// state.
class GaussianObservationNoise : public Environment {
public:
    GaussianObservationNoise(EnvironmentPtr inner, double delta, std::uint64_t seed);

    std::size_t observation_size() const override { return inner_->observation_size(); }
    std::size_t action_count() const override { return inner_->action_count(); }
    std::vector<double> reset() override;
    StepResult step(std::size_t action) override;
    std::string name() const override { return inner_->name(); }

private:
    EnvironmentPtr inner_;
    double delta_;
    std::mt19937_64 rng_;
};

/// Attack noise on a raw FoV observation stream.
class FovAttackNoise : public Environment {
public:
    FovAttackNoise(EnvironmentPtr inner, double attack_prob, std::uint64_t seed);

    std::size_t observation_size() const override { return inner_->observation_size(); }
    std::size_t action_count() const override { return inner_->action_count(); }
    std::vector<double> reset() override;
    StepResult step(std::size_t action) override;
    std::string name() const override { return inner_->name(); }

private:
    std::vector<double> corrupt(const std::vector<double>& raw);

    EnvironmentPtr inner_;
    double attack_prob_;
    std::mt19937_64 rng_;
};

/// Maps a raw FoV stream to [0, 1] by per-channel maxima.
class FovScaling : public Environment {
public:
    explicit FovScaling(EnvironmentPtr inner);

    std::size_t observation_size() const override { return inner_->observation_size(); }
    std::size_t action_count() const override { return inner_->action_count(); }
    std::vector<double> reset() override { return scale_fov(inner_->reset()); }
    StepResult step(std::size_t action) override;
    std::string name() const override { return inner_->name(); }

private:
    EnvironmentPtr inner_;
};

}  // namespace vqrl::env
