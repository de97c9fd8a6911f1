#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqrl/analysis/sampling.hpp"
#include "vqrl/env/factory.hpp"
#include "vqrl/ppo/config.hpp"

namespace vqrl::harness {

/// Invalid configuration: unknown key, wrong type or out-of-range value.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct EvalSettings {
    /// Episodes per evaluation seed; 0 picks 20 for CartPole and 50 for grids.
    std::size_t episodes = 0;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    /// delta values (CartPole) or attack probabilities (grid); empty picks
    /// the standard grid.
    std::vector<double> noise_grid;
    /// Held-out (m_c, m_p, l) triples; empty picks the five test triples.
    std::vector<env::PhysicsTriple> param_grid;
    std::size_t n_states = 2000;
    /// "uniform" or "trajectory".
    std::string sample_mode = "uniform";
    analysis::StateBounds bounds;

    std::size_t resolved_episodes(env::Domain domain) const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    ppo::TrainConfig train;
    env::EnvConfig env;
    EvalSettings eval;

    /// Train config with the top-level seed applied.
    ppo::TrainConfig train_config() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Strict: any key not present in the default layout raises ConfigError.
ExperimentConfig experiment_from_json(const nlohmann::json& doc);

/// Applies "a.b.c=value" overrides. The value is parsed as JSON when possible
/// and taken as a string otherwise. Unknown paths raise ConfigError.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides);

/// $VQRL_RUNS_DIR, or "runs" relative to the working directory.
std::filesystem::path runs_root();
std::filesystem::path run_directory(const ExperimentConfig& config);

/// Parses a number, accepting "inf" / "infinity" (any case).
double parse_number(const std::string& text);
/// JSON number, or the string "inf".
double json_number(const nlohmann::json& value, const std::string& key);

std::vector<double> default_noise_grid(env::Domain domain);

}  // namespace vqrl::harness
