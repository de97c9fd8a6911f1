#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vqrl/harness/commands.hpp"

namespace h = vqrl::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNaN = 3;

std::vector<h::LoadedCheckpoint> load_all(const std::vector<std::string>& paths) {
    std::vector<h::LoadedCheckpoint> out;
    for (const auto& p : paths) {
        out.push_back(h::load_run_checkpoint(p));
    }
    return out;
}

std::filesystem::path run_dir_of(const h::LoadedCheckpoint& c) { return c.path.parent_path(); }

void emit(const h::ResultTable& table, const std::filesystem::path& out) {
    table.save(out);
    table.write_text(std::cout);
    std::cout << "wrote " << out.string() << '\n';
}

std::vector<double> parse_grid(const std::vector<std::string>& cells) {
    std::vector<double> out;
    for (const auto& c : cells) {
        out.push_back(h::parse_number(c));
    }
    return out;
}

std::vector<vqrl::env::PhysicsTriple> parse_triples(const std::vector<std::string>& cells) {
    std::vector<vqrl::env::PhysicsTriple> out;
    for (const auto& c : cells) {
        vqrl::env::PhysicsTriple t{};
        char sep1 = 0;
        char sep2 = 0;
        std::istringstream in(c);
        if (!(in >> t[0] >> sep1 >> t[1] >> sep2 >> t[2]) || sep1 != ',' || sep2 != ',') {
            throw h::ConfigError("physics triple '" + c + "' is not m_c,m_p,l");
        }
        out.push_back(t);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VQ-RL: PPO with a vector-quantized, policy-guided latent space"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool quiet = false;
    auto* train = app.add_subcommand("train", "train one variant");
    train->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    train->add_option("--set", overrides, "dotted override, e.g. train.learning_rate=1e-4");
    train->add_flag("--quiet", quiet, "no per-update progress");

    std::vector<std::string> checkpoints;
    std::vector<std::string> grid;
    std::size_t episodes = 0;
    std::vector<std::uint64_t> seeds;
    std::string out;
    auto* robust = app.add_subcommand("robust", "noise sweep over delta or p_a");
    robust->add_option("--checkpoint", checkpoints, "checkpoint file or run directory")->required();
    robust->add_option("--grid", grid, "noise values (inf = off)")->delimiter(',');
    robust->add_option("--episodes", episodes, "episodes per evaluation seed");
    robust->add_option("--seeds", seeds, "evaluation seeds")->delimiter(',');
    robust->add_option("--out", out, "output directory (default <run>/robust)");

    std::vector<std::string> triples;
    auto* gen = app.add_subcommand("gen", "held-out physics triples or goal cells");
    gen->add_option("--checkpoint", checkpoints, "checkpoint file or run directory")->required();
    gen->add_option("--params", triples, "held-out triple m_c,m_p,l (repeatable)");
    gen->add_option("--episodes", episodes, "episodes per evaluation seed");
    gen->add_option("--seeds", seeds, "evaluation seeds")->delimiter(',');
    gen->add_option("--out", out, "output directory (default <run>/gen)");

    std::string checkpoint;
    std::size_t n_states = 0;
    std::uint64_t analysis_seed = 0;
    std::string sample_mode;
    auto* analyze = app.add_subcommand("analyze", "feature, cluster and PCA reports");
    analyze->add_option("--checkpoint", checkpoint, "checkpoint file or run directory")->required();
    analyze->add_option("--n-states", n_states, "sampled states (default from config, 2000)");
    analyze->add_option("--seed", analysis_seed, "sampling seed")->default_val(0);
    analyze->add_option("--sample-mode", sample_mode, "uniform or trajectory")
        ->check(CLI::IsMember({"uniform", "trajectory"}));
    analyze->add_option("--out", out, "output directory (default <run>/analysis)");

    std::vector<std::string> dirs;
    auto* compare = app.add_subcommand("compare", "side-by-side markdown of result tables");
    compare->add_option("dirs", dirs, "directories holding table.json")->required();
    compare->add_option("--out", out, "markdown file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Usage errors share exit code 2 with bad configs.
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) {
            const auto config = h::load_experiment(config_path, overrides);
            const auto outcome = h::run_training(config, quiet ? nullptr : &std::cout);
            std::cout << "run directory: " << outcome.run_dir.string() << '\n';
            if (outcome.result.nan_abort) {
                std::cerr << "aborted: " << outcome.result.message << '\n';
                return kExitNaN;
            }
            return 0;
        }
        if (robust->parsed()) {
            const auto loaded = load_all(checkpoints);
            const auto& eval = loaded.front().config.eval;
            const auto domain = loaded.front().config.env.domain;
            const auto values = grid.empty() ? (eval.noise_grid.empty() ? h::default_noise_grid(domain) : eval.noise_grid)
                                             : parse_grid(grid);
            const auto table = h::robust_table(loaded, values, episodes ? episodes : eval.resolved_episodes(domain),
                                               seeds.empty() ? eval.seeds : seeds);
            emit(table, out.empty() ? run_dir_of(loaded.front()) / "robust" : std::filesystem::path(out));
            return 0;
        }
        if (gen->parsed()) {
            const auto loaded = load_all(checkpoints);
            const auto& eval = loaded.front().config.eval;
            const auto domain = loaded.front().config.env.domain;
            const auto n = episodes ? episodes : eval.resolved_episodes(domain);
            const auto used_seeds = seeds.empty() ? eval.seeds : seeds;
            const auto dir = out.empty() ? run_dir_of(loaded.front()) / "gen" : std::filesystem::path(out);
            if (vqrl::env::is_cartpole(domain)) {
                std::vector<std::string> warnings;
                auto held_out = triples.empty() ? eval.param_grid : parse_triples(triples);
                if (held_out.empty()) {
                    for (const auto& p : vqrl::env::gen_cartpole_test_set()) {
                        held_out.push_back({p.cart_mass, p.pole_mass, p.half_length});
                    }
                }
                const auto table = h::gen_cartpole_table(loaded, held_out, n, used_seeds, &warnings);
                for (const auto& w : warnings) {
                    std::cerr << "warning: " << w << '\n';
                }
                emit(table, dir);
            } else {
                if (!triples.empty()) {
                    throw h::ConfigError("--params applies to CartPole checkpoints only");
                }
                const auto table = h::gen_minigrid_table(loaded, n, used_seeds);
                emit(table, dir);
                std::ofstream cells(dir / "goal_grid.csv");
                h::write_goal_grid_csv(cells, table);
            }
            return 0;
        }
        if (analyze->parsed()) {
            auto loaded = h::load_run_checkpoint(checkpoint);
            if (!sample_mode.empty()) {
                loaded.config.eval.sample_mode = sample_mode;
            }
            const auto dir = out.empty() ? run_dir_of(loaded) / "analysis" : std::filesystem::path(out);
            std::filesystem::create_directories(dir);
            const auto result = h::analyze_checkpoint(loaded, n_states ? n_states : loaded.config.eval.n_states,
                                                      analysis_seed, dir);
            std::cout << "used embeddings: " << result.report.used << ", tightness ratio: "
                      << result.report.tightness_ratio << '\n';
            std::cout << "wrote " << dir.string() << '\n';
            return 0;
        }
        if (compare->parsed()) {
            std::vector<h::ResultTable> tables;
            for (const auto& d : dirs) {
                tables.push_back(h::ResultTable::load(d));
            }
            const auto md = h::compare_markdown(tables);
            if (out.empty()) {
                std::cout << md;
            } else {
                std::ofstream(out) << md;
            }
            return 0;
        }
    } catch (const h::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const h::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
