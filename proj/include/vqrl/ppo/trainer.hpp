#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqrl/env/factory.hpp"
#include "vqrl/policy/model.hpp"
#include "vqrl/ppo/config.hpp"

namespace vqrl::ppo {

/// One row per collect/optimize cycle.
struct TrainLogRow {
    std::int64_t timestep = 0;
    std::size_t update = 0;
    double loss_rl = 0.0;
    double loss_vq_enc = 0.0;
    double loss_d1 = 0.0;
    double loss_d2 = 0.0;
    double loss_class = 0.0;
    /// Mean undiscounted return of training episodes that ended during this
    /// rollout; carries the previous value when none ended.
    double mean_return = 0.0;
    std::size_t used_embeddings = 0;
    /// Mean ||sg[e] - f||^2 over the update (not part of the CSV).
    double commitment = 0.0;
};

struct EvalPoint {
    std::int64_t timestep = 0;
    std::size_t update = 0;
    double mean_return = 0.0;
    double std_return = 0.0;
};

void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& rows);
std::vector<TrainLogRow> read_train_log_csv(std::istream& in);

struct TrainHooks {
    /// Called after every optimizer step with the running step count.
    std::function<void(std::size_t step, const policy::Model& model)> on_optimizer_step;
    std::function<void(const TrainLogRow& row, const policy::Model& model)> on_update;
    /// When set, train.csv, eval.csv and checkpoints go here.
    std::filesystem::path run_dir;
    /// Stored in every checkpoint and hashed into config_hash.
    nlohmann::json config_record;
    /// Progress lines (one per evaluation); null for silence.
    std::ostream* progress = nullptr;
    /// Stop after this many optimizer steps (0 = no limit).
    std::size_t max_optimizer_steps = 0;
};

struct TrainResult {
    policy::Model model;
    std::vector<TrainLogRow> log;
    std::vector<EvalPoint> evals;
    std::int64_t timesteps = 0;
    std::size_t optimizer_steps = 0;
    double best_eval = 0.0;
    /// Set when a non-finite loss aborted training; `model` then holds the
    /// parameters from before the failing update.
    bool nan_abort = false;
    std::string message;
};

/// Runs collect/optimize cycles until total_timesteps, a stop_at_return
/// evaluation, or a NaN abort. Deterministic for a given config.
TrainResult train(const TrainConfig& config, const env::EnvConfig& env_config, const TrainHooks& hooks = {});

/// Network shape implied by a train config and environment.
policy::NetworkShape network_shape(const TrainConfig& config, const env::EnvConfig& env_config);

}  // namespace vqrl::ppo
