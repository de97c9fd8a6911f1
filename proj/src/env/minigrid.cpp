#include "vqrl/env/minigrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vqrl::env {
namespace {

constexpr std::array<GridPos, 4> kDirections = {GridPos{1, 0}, GridPos{0, 1}, GridPos{-1, 0}, GridPos{0, -1}};

bool in_grid(GridPos p) { return p.col >= 0 && p.row >= 0 && p.col < kGridSize && p.row < kGridSize; }

std::string to_string(GridPos p) { return "(" + std::to_string(p.col) + ", " + std::to_string(p.row) + ")"; }

}  // namespace

bool is_interior(GridPos p) { return p.col >= 1 && p.row >= 1 && p.col <= kGridSize - 2 && p.row <= kGridSize - 2; }

std::vector<GridPos> interior_cells() {
    std::vector<GridPos> cells;
    for (int row = 1; row <= kGridSize - 2; ++row) {
        for (int col = 1; col <= kGridSize - 2; ++col) {
            cells.push_back({col, row});
        }
    }
    return cells;
}

FovObservation render_fov(const GridState& s) {
    const GridPos fwd = kDirections[static_cast<std::size_t>(s.orientation)];
    const GridPos right = kDirections[static_cast<std::size_t>((s.orientation + 1) % 4)];
    FovObservation fov{};
    for (int vr = 0; vr < kViewSize; ++vr) {
        for (int vc = 0; vc < kViewSize; ++vc) {
            const int ahead = kViewSize - 1 - vr;
            const int side = vc - kViewSize / 2;
            const GridPos p{s.agent.col + fwd.col * ahead + right.col * side,
                            s.agent.row + fwd.row * ahead + right.row * side};
            ObjectId obj = ObjectId::Empty;
            ColorId color = ColorId::Red;
            if (!in_grid(p) || !is_interior(p)) {
                obj = ObjectId::Wall;
                color = ColorId::Grey;
            } else if (p == s.goal) {
                obj = ObjectId::Goal;
                color = ColorId::Green;
            }
            const std::size_t base = static_cast<std::size_t>((vr * kViewSize + vc) * 3);
            fov[base] = static_cast<std::uint8_t>(obj);
            fov[base + 1] = static_cast<std::uint8_t>(color);
            fov[base + 2] = obj == ObjectId::Empty ? 0 : 1;
        }
    }
    return fov;
}

bool fov_in_range(const FovObservation& fov) {
    for (std::size_t i = 0; i < fov.size(); ++i) {
        if (fov[i] > kFovChannelMax[i % 3]) {
            return false;
        }
    }
    return true;
}

std::vector<double> scale_fov(std::span<const double> raw) {
    if (raw.size() != kFovSize) {
        throw std::invalid_argument("scale_fov: expected " + std::to_string(kFovSize) + " values");
    }
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = raw[i] / kFovChannelMax[i % 3];
    }
    return out;
}

std::vector<double> fov_to_values(const FovObservation& fov) { return {fov.begin(), fov.end()}; }

FovObservation fov_from_values(std::span<const double> values) {
    if (values.size() != kFovSize) {
        throw std::invalid_argument("fov_from_values: expected " + std::to_string(kFovSize) + " values");
    }
    FovObservation fov{};
    for (std::size_t i = 0; i < kFovSize; ++i) {
        fov[i] = static_cast<std::uint8_t>(std::lround(values[i]));
    }
    return fov;
}

MiniGridTransition minigrid_step(GridState& s, std::size_t action) {
    if (action > 2) {
        throw std::out_of_range("minigrid: action " + std::to_string(action) + " not in {0, 1, 2}");
    }
    ++s.steps;
    MiniGridTransition t;
    switch (static_cast<MiniGridAction>(action)) {
        case MiniGridAction::TurnLeft:
            s.orientation = (s.orientation + 3) % 4;
            break;
        case MiniGridAction::TurnRight:
            s.orientation = (s.orientation + 1) % 4;
            break;
        case MiniGridAction::Forward: {
            const GridPos d = kDirections[static_cast<std::size_t>(s.orientation)];
            const GridPos next{s.agent.col + d.col, s.agent.row + d.row};
            if (is_interior(next)) {
                s.agent = next;
            }
            if (s.agent == s.goal) {
                t.terminated = true;
                t.reward = 1.0 - 0.9 * static_cast<double>(s.steps) / kMiniGridMaxSteps;
            }
            break;
        }
    }
    t.truncated = !t.terminated && s.steps >= kMiniGridMaxSteps;
    return t;
}

GoalSplit GoalSplit::standard() {
    return GoalSplit{{{1, 1}, {4, 1}, {1, 4}, {4, 4}}, {}};
}

void GoalSplit::validate() const {
    if (train.empty()) {
        throw std::invalid_argument("goal split: empty training list");
    }
    for (const auto& list : {train, test}) {
        for (const auto& p : list) {
            if (!is_interior(p)) {
                throw std::invalid_argument("goal split: cell " + to_string(p) + " is not inside the walls");
            }
        }
    }
    for (const auto& p : test) {
        if (std::find(train.begin(), train.end(), p) != train.end()) {
            throw std::invalid_argument("goal split: cell " + to_string(p) + " is in both train and test");
        }
    }
}

std::vector<GridPos> GoalSplit::resolved_test() const {
    validate();
    if (!test.empty()) {
        return test;
    }
    std::vector<GridPos> out;
    for (const auto& p : interior_cells()) {
        if (std::find(train.begin(), train.end(), p) == train.end()) {
            out.push_back(p);
        }
    }
    return out;
}

MiniGridEnv::MiniGridEnv(std::vector<GridPos> goals, GoalMode mode, std::uint64_t seed)
    : goals_(std::move(goals)), mode_(mode), rng_(seed) {
    if (goals_.empty()) {
        throw std::invalid_argument("minigrid: no goal cells");
    }
    for (const auto& g : goals_) {
        if (!is_interior(g)) {
            throw std::invalid_argument("minigrid: goal " + to_string(g) + " is not inside the walls");
        }
    }
}

std::vector<double> MiniGridEnv::reset() {
    if (mode_ == GoalMode::Cycle) {
        state_.goal = goals_[next_goal_ % goals_.size()];
        ++next_goal_;
    } else if (goals_.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, goals_.size() - 1);
        state_.goal = goals_[pick(rng_)];
    } else {
        state_.goal = goals_.front();
    }
    std::vector<GridPos> starts;
    for (const auto& p : interior_cells()) {
        if (!(p == state_.goal)) {
            starts.push_back(p);
        }
    }
    std::uniform_int_distribution<std::size_t> pick_start(0, starts.size() - 1);
    std::uniform_int_distribution<int> pick_dir(0, 3);
    state_.agent = starts[pick_start(rng_)];
    state_.orientation = pick_dir(rng_);
    state_.steps = 0;
    needs_reset_ = false;
    return fov_to_values(render_fov(state_));
}

StepResult MiniGridEnv::step(std::size_t action) {
    if (needs_reset_) {
        throw std::logic_error("minigrid: step called on a finished episode");
    }
    const auto t = minigrid_step(state_, action);
    StepResult r;
    r.observation = fov_to_values(render_fov(state_));
    r.reward = t.reward;
    r.terminated = t.terminated;
    r.truncated = t.truncated;
    needs_reset_ = r.done();
    return r;
}

}  // namespace vqrl::env
