#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqrl/analysis/report.hpp"
#include "vqrl/harness/experiment.hpp"
#include "vqrl/harness/results.hpp"
#include "vqrl/policy/model.hpp"
#include "vqrl/ppo/trainer.hpp"

namespace vqrl::harness {

/// Missing or unreadable checkpoint.
class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadedCheckpoint {
    std::filesystem::path path;
    policy::Model model;
    ExperimentConfig config;
    std::int64_t timestep = 0;

    bool uses_codebook() const { return config.train.variant != ppo::Variant::Ppo; }
    std::string label() const { return config.name + "_s" + std::to_string(config.seed); }
};

/// Accepts a checkpoint file or a run directory (reads final.json).
LoadedCheckpoint load_run_checkpoint(const std::filesystem::path& path);

struct TrainOutcome {
    std::filesystem::path run_dir;
    ppo::TrainResult result;
};

/// Trains into run_directory(config): config.json, train.csv, eval.csv,
/// checkpoints and final.json.
TrainOutcome run_training(const ExperimentConfig& config, std::ostream* progress);

/// Argmax returns of `episodes` episodes for evaluation seed `seed`. The
/// initial-state and noise streams depend only on the seed, so every
/// condition sees the same starting states.
std::vector<double> evaluate_seed(const policy::Model& model, const env::EnvConfig& env_config,
                                  std::size_t episodes, std::uint64_t seed);

/// Noise sweep: delta grid for CartPole domains, attack-probability grid for
/// grid domains. Infinity (delta) and 0 (p_a) mean noise off.
ResultTable robust_table(const std::vector<LoadedCheckpoint>& checkpoints, const std::vector<double>& grid,
                         std::size_t episodes, const std::vector<std::uint64_t>& seeds);

/// Physics triples: the checkpoint's training triples first (noted), then the
/// held-out grid. Held-out triples that coincide with a training triple are
/// noted and reported through `warnings`.
ResultTable gen_cartpole_table(const std::vector<LoadedCheckpoint>& checkpoints,
                               const std::vector<env::PhysicsTriple>& grid, std::size_t episodes,
                               const std::vector<std::uint64_t>& seeds, std::vector<std::string>* warnings);

/// One row per interior goal cell; training cells are noted.
ResultTable gen_minigrid_table(const std::vector<LoadedCheckpoint>& checkpoints, std::size_t episodes,
                               const std::vector<std::uint64_t>& seeds);

/// 6 x 6 grid of mean returns (row-major, walls left empty).
void write_goal_grid_csv(std::ostream& out, const ResultTable& table);

/// Samples states per the checkpoint's eval settings and runs the analysis
/// pipeline into `out_dir`.
analysis::AnalysisOutputs analyze_checkpoint(const LoadedCheckpoint& checkpoint, std::size_t n_states,
                                             std::uint64_t seed, const std::filesystem::path& out_dir);

std::string format_triple(const env::PhysicsTriple& t);
std::string format_noise(double value);

}  // namespace vqrl::harness
