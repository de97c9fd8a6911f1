#include "vqrl/ppo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vqrl/autodiff/adam.hpp"
#include "vqrl/ppo/evaluate.hpp"
#include "vqrl/ppo/losses.hpp"
#include "vqrl/ppo/rollout.hpp"
#include "vqrl/ppo/seeds.hpp"

namespace vqrl::ppo {
namespace {

// Stream ids for derive_seed; kept apart so adding workers never shifts the
// sampling or evaluation streams.
constexpr std::uint64_t kSamplingStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kEvalEnvStream = 3;
constexpr std::uint64_t kEvalNoiseStream = 4;
constexpr std::uint64_t kWorkerEnvBase = 1000;
constexpr std::uint64_t kWorkerNoiseBase = 2000;

const char* kCsvHeader = "timestep,update,loss_rl,loss_vq_enc,loss_d1,loss_d2,loss_class,mean_return,used_embeddings";

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

void save(const std::filesystem::path& path, const policy::Model& model, const TrainHooks& hooks,
          std::int64_t timestep) {
    policy::Checkpoint meta;
    meta.config = hooks.config_record;
    meta.config_hash = policy::config_hash(hooks.config_record);
    meta.timestep = timestep;
    policy::save_checkpoint(path, model, meta);
}

}  // namespace

void write_train_log_csv(std::ostream& out, const std::vector<TrainLogRow>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.timestep << ',' << r.update << ',' << fmt(r.loss_rl) << ',' << fmt(r.loss_vq_enc) << ','
            << fmt(r.loss_d1) << ',' << fmt(r.loss_d2) << ',' << fmt(r.loss_class) << ',' << fmt(r.mean_return)
            << ',' << r.used_embeddings << '\n';
    }
}

std::vector<TrainLogRow> read_train_log_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw std::runtime_error("train log: unexpected header '" + line + "'");
    }
    std::vector<TrainLogRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream s(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(s, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != 9) {
            throw std::runtime_error("train log: expected 9 columns in '" + line + "'");
        }
        TrainLogRow r;
        r.timestep = std::stoll(cells[0]);
        r.update = std::stoul(cells[1]);
        r.loss_rl = std::stod(cells[2]);
        r.loss_vq_enc = std::stod(cells[3]);
        r.loss_d1 = std::stod(cells[4]);
        r.loss_d2 = std::stod(cells[5]);
        r.loss_class = std::stod(cells[6]);
        r.mean_return = std::stod(cells[7]);
        r.used_embeddings = std::stoul(cells[8]);
        rows.push_back(r);
    }
    return rows;
}

policy::NetworkShape network_shape(const TrainConfig& config, const env::EnvConfig& env_config) {
    policy::NetworkShape shape;
    shape.observation_size = env_config.observation_size();
    shape.actions = env_config.action_count();
    shape.hidden = config.hidden;
    shape.feature_size =
        config.feature_size != 0 ? config.feature_size : (env::is_cartpole(env_config.domain) ? 16 : 32);
    return shape;
}

TrainResult train(const TrainConfig& raw_config, const env::EnvConfig& env_config, const TrainHooks& hooks) {
    const TrainConfig config = raw_config.resolved();
    config.validate();
    const policy::NetworkShape shape = network_shape(config, env_config);
    if (config.codebook_size <= shape.actions) {
        throw std::invalid_argument("codebook_size must exceed the number of actions");
    }

    std::mt19937_64 init_rng(config.seed);
    TrainResult result{policy::Model::create(shape, config.codebook_size, init_rng), {}, {}, 0, 0, 0.0, false, {}};
    policy::Model& model = result.model;

    std::vector<env::EnvironmentPtr> envs;
    for (std::size_t w = 0; w < config.workers; ++w) {
        envs.push_back(env::make_environment(env_config, derive_seed(config.seed, kWorkerEnvBase + w),
                                             derive_seed(config.seed, kWorkerNoiseBase + w)));
    }
    RolloutCollector collector(std::move(envs));
    std::mt19937_64 sample_rng(derive_seed(config.seed, kSamplingStream));
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffleStream));

    ad::AdamConfig adam_config;
    adam_config.learning_rate = config.learning_rate;
    ad::AdamState adam(adam_config);
    std::vector<ad::Tensor> params = model.parameters();

    std::ofstream csv;
    std::ofstream eval_csv;
    if (!hooks.run_dir.empty()) {
        std::filesystem::create_directories(hooks.run_dir);
        csv.open(hooks.run_dir / "train.csv");
        csv << kCsvHeader << '\n';
        eval_csv.open(hooks.run_dir / "eval.csv");
        eval_csv << "timestep,update,mean_return,std_return\n";
    }

    const std::size_t batch_size = config.workers * config.steps_per_worker;
    const std::size_t updates =
        static_cast<std::size_t>((config.total_timesteps + static_cast<std::int64_t>(batch_size) - 1) /
                                 static_cast<std::int64_t>(batch_size));
    const EvalSeeds eval_seeds{derive_seed(config.seed, kEvalEnvStream), derive_seed(config.seed, kEvalNoiseStream)};

    bool have_best = false;
    policy::Model best = model.clone();
    double last_mean_return = 0.0;
    std::vector<std::size_t> order(batch_size);

    for (std::size_t update = 1; update <= updates; ++update) {
        if (config.anneal_lr) {
            const double frac = 1.0 - static_cast<double>(update - 1) / static_cast<double>(updates);
            adam.config.learning_rate = frac * config.learning_rate;
        }
        const policy::Model last_good = model.clone();

        RolloutBatch batch =
            collector.collect(model.net, config.steps_per_worker, config.gamma, config.gae_lambda, sample_rng);
        result.timesteps += static_cast<std::int64_t>(batch_size);
        normalize_advantages(batch.advantages);
        if (!batch.episode_returns.empty()) {
            last_mean_return = mean_of(batch.episode_returns);
        }

        TrainLogRow row;
        row.timestep = result.timesteps;
        row.update = update;
        std::size_t minibatches = 0;
        std::vector<std::size_t> assignments;
        bool diverged = false;
        for (int epoch = 0; epoch < config.epochs && !diverged; ++epoch) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            for (std::size_t start = 0; start < batch_size; start += config.minibatch) {
                const std::size_t end = std::min(batch_size, start + config.minibatch);
                const Minibatch mb =
                    make_minibatch(batch, std::span<const std::size_t>(order.data() + start, end - start));
                ad::Graph g;
                LossBreakdown parts;
                const ad::Tensor loss = total_loss(g, mb, model, config, &parts);
                if (!std::isfinite(parts.total) || !std::isfinite(parts.vq_enc) || !std::isfinite(parts.cls)) {
                    diverged = true;
                    break;
                }
                g.backward(loss);
                if (config.max_grad_norm > 0.0) {
                    ad::clip_grad_norm(params, config.max_grad_norm);
                }
                ad::adam_step(params, adam);
                ad::zero_grads(params);
                ++result.optimizer_steps;
                if (hooks.on_optimizer_step) {
                    hooks.on_optimizer_step(result.optimizer_steps, model);
                }

                row.loss_rl += parts.rl;
                row.loss_vq_enc += parts.vq_enc;
                row.loss_d1 += parts.d1;
                row.loss_d2 += parts.d2;
                row.loss_class += parts.cls;
                row.commitment += parts.commitment;
                ++minibatches;
                if (epoch + 1 == config.epochs) {
                    assignments.insert(assignments.end(), parts.assignments.begin(), parts.assignments.end());
                }
                if (hooks.max_optimizer_steps != 0 && result.optimizer_steps >= hooks.max_optimizer_steps) {
                    break;
                }
            }
            if (hooks.max_optimizer_steps != 0 && result.optimizer_steps >= hooks.max_optimizer_steps) {
                break;
            }
        }

        if (diverged) {
            model = last_good.clone();
            result.nan_abort = true;
            result.message = "non-finite loss at update " + std::to_string(update) + "; kept parameters from before it";
            if (!hooks.run_dir.empty()) {
                save(hooks.run_dir / "last_good.json", model, hooks, result.timesteps - static_cast<std::int64_t>(batch_size));
            }
            return result;
        }

        const double denom = static_cast<double>(std::max<std::size_t>(minibatches, 1));
        row.loss_rl /= denom;
        row.loss_vq_enc /= denom;
        row.loss_d1 /= denom;
        row.loss_d2 /= denom;
        row.loss_class /= denom;
        row.commitment /= denom;
        row.mean_return = last_mean_return;
        row.used_embeddings =
            config.uses_vq() ? vq::utilization(assignments, model.codebook.size()).used : std::size_t{0};
        result.log.push_back(row);
        if (csv.is_open()) {
            csv << row.timestep << ',' << row.update << ',' << fmt(row.loss_rl) << ',' << fmt(row.loss_vq_enc)
                << ',' << fmt(row.loss_d1) << ',' << fmt(row.loss_d2) << ',' << fmt(row.loss_class) << ','
                << fmt(row.mean_return) << ',' << row.used_embeddings << '\n';
            csv.flush();
        }
        if (hooks.on_update) {
            hooks.on_update(row, model);
        }
        if (config.checkpoint_every != 0 && update % config.checkpoint_every == 0 && !hooks.run_dir.empty()) {
            save(hooks.run_dir / ("ckpt_" + std::to_string(result.timesteps) + ".json"), model, hooks,
                 result.timesteps);
        }

        const bool last = update == updates ||
                          (hooks.max_optimizer_steps != 0 && result.optimizer_steps >= hooks.max_optimizer_steps);
        bool stop = false;
        if ((config.eval_every != 0 && update % config.eval_every == 0) || last) {
            const auto returns = evaluate(model.net, env_config, config.eval_episodes, eval_seeds);
            EvalPoint point{result.timesteps, update, mean_of(returns), std_of(returns)};
            result.evals.push_back(point);
            if (eval_csv.is_open()) {
                eval_csv << point.timestep << ',' << point.update << ',' << fmt(point.mean_return) << ','
                         << fmt(point.std_return) << '\n';
                eval_csv.flush();
            }
            if (hooks.progress != nullptr) {
                *hooks.progress << "[" << variant_name(config.variant) << " seed " << config.seed << "] step "
                                << point.timestep << " eval " << point.mean_return << " train " << last_mean_return
                                << " used " << row.used_embeddings << '\n';
            }
            if (!have_best || point.mean_return >= result.best_eval) {
                have_best = true;
                result.best_eval = point.mean_return;
                best = model.clone();
            }
            if (config.stop_at_return > 0.0 && point.mean_return >= config.stop_at_return) {
                stop = true;
            }
        }
        if (stop || last) {
            break;
        }
    }

    if (config.keep_best && have_best) {
        model = best.clone();
    }
    if (!hooks.run_dir.empty()) {
        save(hooks.run_dir / "final.json", model, hooks, result.timesteps);
    }
    return result;
}

}  // namespace vqrl::ppo
