#include "vqrl/harness/commands.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "vqrl/analysis/sampling.hpp"
#include "vqrl/ppo/evaluate.hpp"
#include "vqrl/ppo/seeds.hpp"

namespace vqrl::harness {
namespace {

constexpr std::uint64_t kEvalEnvStream = 11;
constexpr std::uint64_t kEvalNoiseStream = 12;

std::string short_num(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

void check_same_kind(const std::vector<LoadedCheckpoint>& checkpoints) {
    if (checkpoints.empty()) {
        throw std::invalid_argument("no checkpoints given");
    }
    const auto& first = checkpoints.front().config;
    for (const auto& c : checkpoints) {
        if (c.config.env.domain != first.env.domain || c.config.train.variant != first.train.variant) {
            throw std::invalid_argument("checkpoints mix domains or variants: " + c.path.string());
        }
    }
}

ResultTable make_table(const std::vector<LoadedCheckpoint>& checkpoints, const std::vector<std::uint64_t>& seeds,
                       std::string kind, std::string condition_name) {
    check_same_kind(checkpoints);
    ResultTable t;
    t.kind = std::move(kind);
    t.condition_name = std::move(condition_name);
    t.domain = env::domain_name(checkpoints.front().config.env.domain);
    t.variant = ppo::variant_name(checkpoints.front().config.train.variant);
    for (const auto& c : checkpoints) {
        for (auto s : seeds) {
            t.units.push_back(c.label() + "/e" + std::to_string(s));
        }
    }
    return t;
}

ResultRow evaluate_row(const std::vector<LoadedCheckpoint>& checkpoints, const std::vector<std::uint64_t>& seeds,
                       std::size_t episodes, const std::function<env::EnvConfig(const LoadedCheckpoint&)>& make_env,
                       std::string condition, std::string note) {
    ResultRow row{std::move(condition), std::move(note), {}};
    for (const auto& c : checkpoints) {
        const env::EnvConfig cfg = make_env(c);
        for (auto s : seeds) {
            row.returns.push_back(evaluate_seed(c.model, cfg, episodes, s));
        }
    }
    return row;
}

env::EnvConfig clean_env(const LoadedCheckpoint& c) {
    env::EnvConfig cfg = c.config.env;
    cfg.noise = env::NoiseConfig{};
    return cfg;
}

}  // namespace

std::string format_triple(const env::PhysicsTriple& t) {
    return "(" + short_num(t[0]) + ", " + short_num(t[1]) + ", " + short_num(t[2]) + ")";
}

std::string format_noise(double value) { return std::isinf(value) ? "inf" : short_num(value); }

LoadedCheckpoint load_run_checkpoint(const std::filesystem::path& path) {
    std::filesystem::path file = path;
    if (std::filesystem::is_directory(path)) {
        file = path / "final.json";
    }
    std::ifstream in(file);
    if (!in) {
        throw CheckpointError("checkpoint not found: " + file.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("checkpoint " + file.string() + " is not valid JSON: " + e.what());
    }
    policy::Checkpoint meta;
    std::optional<policy::Model> model;
    try {
        model = policy::model_from_json(doc, &meta);
    } catch (const std::exception& e) {
        throw CheckpointError("checkpoint " + file.string() + ": " + e.what());
    }
    if (policy::config_hash(meta.config) != meta.config_hash) {
        throw CheckpointError("checkpoint " + file.string() + ": config hash mismatch");
    }
    return LoadedCheckpoint{file, std::move(*model), experiment_from_json(meta.config), meta.timestep};
}

TrainOutcome run_training(const ExperimentConfig& config, std::ostream* progress) {
    const auto run_dir = run_directory(config);
    std::filesystem::create_directories(run_dir);
    const nlohmann::json record = to_json(config);
    {
        std::ofstream echo(run_dir / "config.json");
        echo << record.dump(2) << '\n';
    }
    ppo::TrainHooks hooks;
    hooks.run_dir = run_dir;
    hooks.config_record = record;
    hooks.progress = progress;
    return TrainOutcome{run_dir, ppo::train(config.train_config(), config.env, hooks)};
}

std::vector<double> evaluate_seed(const policy::Model& model, const env::EnvConfig& env_config,
                                  std::size_t episodes, std::uint64_t seed) {
    return ppo::evaluate(model.net, env_config, episodes,
                         {ppo::derive_seed(seed, kEvalEnvStream), ppo::derive_seed(seed, kEvalNoiseStream)});
}

ResultTable robust_table(const std::vector<LoadedCheckpoint>& checkpoints, const std::vector<double>& grid,
                         std::size_t episodes, const std::vector<std::uint64_t>& seeds) {
    const bool cart = env::is_cartpole(checkpoints.at(0).config.env.domain);
    ResultTable t = make_table(checkpoints, seeds, "robust", cart ? "delta" : "p_a");
    for (double v : grid) {
        if (cart ? !(v > 0.0) : (v < 0.0 || v > 1.0)) {
            throw std::invalid_argument("noise grid value " + format_noise(v) + " out of range");
        }
        auto make_env = [&](const LoadedCheckpoint& c) {
            env::EnvConfig cfg = clean_env(c);
            if (cart) {
                cfg.noise.mode = env::NoiseMode::Gaussian;
                cfg.noise.delta = v;
            } else {
                cfg.noise.mode = env::NoiseMode::Attack;
                cfg.noise.attack_prob = v;
            }
            return cfg;
        };
        const bool off = cart ? std::isinf(v) : v == 0.0;
        t.rows.push_back(evaluate_row(checkpoints, seeds, episodes, make_env, format_noise(v), off ? "noise off" : ""));
    }
    return t;
}

ResultTable gen_cartpole_table(const std::vector<LoadedCheckpoint>& checkpoints,
                               const std::vector<env::PhysicsTriple>& grid, std::size_t episodes,
                               const std::vector<std::uint64_t>& seeds, std::vector<std::string>* warnings) {
    if (!env::is_cartpole(checkpoints.at(0).config.env.domain)) {
        throw std::invalid_argument("gen: physics grid needs a CartPole checkpoint");
    }
    ResultTable t = make_table(checkpoints, seeds, "gen", "params");
    std::vector<env::PhysicsTriple> training;
    for (const auto& p : env::resolve_params(checkpoints.front().config.env)) {
        training.push_back({p.cart_mass, p.pole_mass, p.half_length});
    }
    auto row_for = [&](const env::PhysicsTriple& triple, std::string note) {
        auto make_env = [&](const LoadedCheckpoint& c) {
            env::EnvConfig cfg = clean_env(c);
            cfg.params_set = {triple};
            return cfg;
        };
        t.rows.push_back(evaluate_row(checkpoints, seeds, episodes, make_env, format_triple(triple), std::move(note)));
    };
    for (const auto& tr : training) {
        row_for(tr, "training condition");
    }
    for (const auto& tr : grid) {
        bool overlap = false;
        for (const auto& known : training) {
            overlap = overlap || known == tr;
        }
        if (overlap && warnings != nullptr) {
            warnings->push_back("held-out triple " + format_triple(tr) + " overlaps the training set");
        }
        row_for(tr, overlap ? "WARNING: overlaps training set" : "held out");
    }
    return t;
}

ResultTable gen_minigrid_table(const std::vector<LoadedCheckpoint>& checkpoints, std::size_t episodes,
                               const std::vector<std::uint64_t>& seeds) {
    if (env::is_cartpole(checkpoints.at(0).config.env.domain)) {
        throw std::invalid_argument("gen: goal grid needs a grid-world checkpoint");
    }
    ResultTable t = make_table(checkpoints, seeds, "gen", "goal");
    const auto& base = checkpoints.front().config.env;
    std::vector<env::GridPos> train_goals = base.domain == env::Domain::GenMiniGrid
                                                ? base.goals.train
                                                : std::vector<env::GridPos>{{env::kGridSize - 2, env::kGridSize - 2}};
    for (const auto& cell : env::interior_cells()) {
        bool is_train = false;
        for (const auto& g : train_goals) {
            is_train = is_train || g == cell;
        }
        auto make_env = [&](const LoadedCheckpoint& c) {
            env::EnvConfig cfg = clean_env(c);
            cfg.fixed_goal = cell;
            return cfg;
        };
        const std::string label = "(" + std::to_string(cell.col) + ", " + std::to_string(cell.row) + ")";
        t.rows.push_back(evaluate_row(checkpoints, seeds, episodes, make_env, label, is_train ? "train" : "test"));
    }
    return t;
}

void write_goal_grid_csv(std::ostream& out, const ResultTable& table) {
    std::map<std::pair<int, int>, double> cells;
    for (const auto& r : table.rows) {
        int col = 0;
        int row = 0;
        if (std::sscanf(r.condition.c_str(), "(%d, %d)", &col, &row) != 2) {
            throw std::invalid_argument("goal grid: condition '" + r.condition + "' is not a cell");
        }
        cells[{row, col}] = r.mean();
    }
    out << "row";
    for (int c = 0; c < env::kGridSize; ++c) {
        out << ",c" << c;
    }
    out << '\n';
    for (int r = 0; r < env::kGridSize; ++r) {
        out << r;
        for (int c = 0; c < env::kGridSize; ++c) {
            out << ',';
            if (auto it = cells.find({r, c}); it != cells.end()) {
                out << std::setprecision(17) << it->second;
            }
        }
        out << '\n';
    }
}

analysis::AnalysisOutputs analyze_checkpoint(const LoadedCheckpoint& checkpoint, std::size_t n_states,
                                             std::uint64_t seed, const std::filesystem::path& out_dir) {
    const auto& cfg = checkpoint.config;
    env::EnvConfig env_cfg = clean_env(checkpoint);
    const auto states = cfg.eval.sample_mode == "trajectory"
                            ? analysis::sample_trajectory_states(checkpoint.model.net, env_cfg, n_states, seed)
                            : analysis::sample_states(env_cfg, n_states, seed, cfg.eval.bounds);
    auto out = analysis::run_analysis(checkpoint.model, checkpoint.uses_codebook(), env_cfg.domain, states, seed,
                                      out_dir);
    out.json["checkpoint"] = checkpoint.path.string();
    out.json["variant"] = ppo::variant_name(cfg.train.variant);
    out.json["domain"] = env::domain_name(env_cfg.domain);
    out.json["sample_mode"] = cfg.eval.sample_mode;
    if (!out_dir.empty()) {
        std::ofstream report(out_dir / "report.json");
        report << out.json.dump(2) << '\n';
    }
    return out;
}

}  // namespace vqrl::harness
