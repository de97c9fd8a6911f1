#include "vqrl/analysis/sampling.hpp"

#include <random>
#include <stdexcept>

#include "vqrl/env/cartpole.hpp"
#include "vqrl/env/minigrid.hpp"

namespace vqrl::analysis {
namespace {

std::vector<env::GridPos> goal_cells(const env::EnvConfig& config) {
    if (config.fixed_goal) {
        return {*config.fixed_goal};
    }
    if (config.domain == env::Domain::GenMiniGrid) {
        config.goals.validate();
        return config.goal_split == "test" ? config.goals.resolved_test() : config.goals.train;
    }
    return {env::GridPos{env::kGridSize - 2, env::kGridSize - 2}};
}

SampledState cartpole_sample(const env::CartPoleState& s, std::size_t stack) {
    SampledState out;
    const auto a = s.as_array();
    out.components.assign(a.begin(), a.end());
    for (std::size_t i = 0; i < stack; ++i) {
        out.observation.insert(out.observation.end(), a.begin(), a.end());
    }
    return out;
}

SampledState grid_sample(const env::GridState& s) {
    SampledState out;
    out.components = {static_cast<double>(s.agent.col), static_cast<double>(s.agent.row),
                      static_cast<double>(s.orientation), static_cast<double>(s.goal.col),
                      static_cast<double>(s.goal.row)};
    out.observation = env::scale_fov(env::fov_to_values(env::render_fov(s)));
    return out;
}

}  // namespace

std::vector<std::string> component_names(env::Domain domain) {
    if (env::is_cartpole(domain)) {
        return {"cart_position", "cart_velocity", "pole_angle", "pole_angular_velocity"};
    }
    return {"agent_col", "agent_row", "orientation", "goal_col", "goal_row"};
}

std::vector<SampledState> sample_states(const env::EnvConfig& config, std::size_t n, std::uint64_t seed,
                                        const StateBounds& bounds) {
    if (n == 0) {
        throw std::invalid_argument("sample_states: n must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<SampledState> out;
    out.reserve(n);
    if (env::is_cartpole(config.domain)) {
        const std::size_t stack = config.domain == env::Domain::GenCartPole ? 4 : 1;
        auto u = [&rng](double b) { return std::uniform_real_distribution<double>(-b, b)(rng); };
        for (std::size_t i = 0; i < n; ++i) {
            env::CartPoleState s;
            s.x = u(bounds.x);
            s.x_dot = u(bounds.x_dot);
            s.theta = u(bounds.theta);
            s.theta_dot = u(bounds.theta_dot);
            out.push_back(cartpole_sample(s, stack));
        }
        return out;
    }

    const auto goals = goal_cells(config);
    const auto cells = env::interior_cells();
    std::vector<env::GridState> legal;
    for (const auto& goal : goals) {
        for (const auto& cell : cells) {
            if (cell == goal) {
                continue;
            }
            for (int dir = 0; dir < 4; ++dir) {
                env::GridState s;
                s.agent = cell;
                s.orientation = dir;
                s.goal = goal;
                legal.push_back(s);
            }
        }
    }
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(grid_sample(legal[pick(rng)]));
    }
    return out;
}

std::vector<SampledState> sample_trajectory_states(const policy::PolicyBundle& bundle, const env::EnvConfig& config,
                                                   std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw std::invalid_argument("sample_trajectory_states: n must be >= 1");
    }
    std::mt19937_64 rng(seed);
    std::vector<SampledState> out;
    out.reserve(n);
    if (env::is_cartpole(config.domain)) {
        const std::size_t stack = config.domain == env::Domain::GenCartPole ? 4 : 1;
        const auto params = env::resolve_params(config);
        std::uniform_real_distribution<double> init(-0.05, 0.05);
        std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
        while (out.size() < n) {
            const auto& p = params[pick(rng)];
            env::CartPoleState s{init(rng), init(rng), init(rng), init(rng)};
            std::vector<env::CartPoleState> window(stack, s);
            for (int t = 0; t < p.max_steps && out.size() < n; ++t) {
                SampledState row = cartpole_sample(s, 0);
                for (const auto& w : window) {
                    const auto a = w.as_array();
                    row.observation.insert(row.observation.end(), a.begin(), a.end());
                }
                const auto sample = policy::act(bundle, row.observation, &rng);
                out.push_back(std::move(row));
                const auto next = env::cartpole_step(s, sample.action, p);
                if (next.terminated) {
                    break;
                }
                s = next.next;
                window.erase(window.begin());
                window.push_back(s);
            }
        }
        return out;
    }

    const auto goals = goal_cells(config);
    auto cells = env::interior_cells();
    std::uniform_int_distribution<std::size_t> pick_goal(0, goals.size() - 1);
    std::uniform_int_distribution<int> pick_dir(0, 3);
    while (out.size() < n) {
        env::GridState s;
        s.goal = goals[pick_goal(rng)];
        std::vector<env::GridPos> starts;
        for (const auto& c : cells) {
            if (!(c == s.goal)) {
                starts.push_back(c);
            }
        }
        s.agent = starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
        s.orientation = pick_dir(rng);
        while (out.size() < n) {
            SampledState row = grid_sample(s);
            const auto sample = policy::act(bundle, row.observation, &rng);
            out.push_back(std::move(row));
            const auto t = env::minigrid_step(s, sample.action);
            if (t.terminated || t.truncated) {
                break;
            }
        }
    }
    return out;
}

}  // namespace vqrl::analysis
