#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vqrl/env/environment.hpp"

namespace vqrl::env {

/// Object ids of the first FoV layer.
enum class ObjectId : std::uint8_t {
    Unseen = 0,
    Empty = 1,
    Wall = 2,
    Floor = 3,
    Door = 4,
    Key = 5,
    Ball = 6,
    Box = 7,
    Goal = 8,
    Lava = 9,
    Agent = 10,
};

/// Colour ids of the second FoV layer.
enum class ColorId : std::uint8_t { Red = 0, Green = 1, Blue = 2, Purple = 3, Yellow = 4, Grey = 5 };

inline constexpr int kGridSize = 6;
inline constexpr int kViewSize = 7;
inline constexpr std::size_t kFovCells = kViewSize * kViewSize;
inline constexpr std::size_t kFovSize = kFovCells * 3;
inline constexpr int kMiniGridMaxSteps = 4 * kGridSize * kGridSize;
inline constexpr std::array<int, 3> kFovChannelMax = {10, 5, 1};

struct GridPos {
    int col = 0;
    int row = 0;
    bool operator==(const GridPos&) const = default;
};

bool is_interior(GridPos p);
std::vector<GridPos> interior_cells();

/// Orientation 0 faces +col (east), 1 +row (south), 2 west, 3 north.
struct GridState {
    GridPos agent;
    int orientation = 0;
    GridPos goal{kGridSize - 2, kGridSize - 2};
    int steps = 0;
};

enum class MiniGridAction : std::size_t { TurnLeft = 0, TurnRight = 1, Forward = 2 };

/// 7 x 7 x 3 egocentric view, stored (view_row, view_col, channel).
/// View row 0 is farthest ahead, row 6 holds the agent at column 3; column 0
/// is on the agent's left. Channel 2 is 1 for any non-empty cell.
using FovObservation = std::array<std::uint8_t, kFovSize>;

FovObservation render_fov(const GridState& state);
bool fov_in_range(const FovObservation& fov);
/// Divides each channel by its maximum (10, 5, 1).
std::vector<double> scale_fov(std::span<const double> raw);
std::vector<double> fov_to_values(const FovObservation& fov);
FovObservation fov_from_values(std::span<const double> values);

struct MiniGridTransition {
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
};

/// Applies one action in place. Reaching the goal pays 1 - 0.9 * steps / 144.
MiniGridTransition minigrid_step(GridState& state, std::size_t action);

/// Goal cells for the goal-generalization task. Both lists must lie in the
/// 4 x 4 interior and be disjoint; an empty test list means "every interior
/// cell not used for training".
struct GoalSplit {
    std::vector<GridPos> train;
    std::vector<GridPos> test;

    static GoalSplit standard();
    void validate() const;
    std::vector<GridPos> resolved_test() const;
};

enum class GoalMode { Sample, Cycle };

/// Empty 6 x 6 room with a random agent pose. Produces the raw FoV as doubles;
/// scaling is a separate wrapper so that observation noise can act on the
/// integer encoding.
class MiniGridEnv : public Environment {
public:
    MiniGridEnv(std::vector<GridPos> goals, GoalMode mode, std::uint64_t seed);

    std::size_t observation_size() const override { return kFovSize; }
    std::size_t action_count() const override { return 3; }
    std::vector<double> reset() override;
    StepResult step(std::size_t action) override;
    std::string name() const override { return "minigrid"; }

    const GridState& state() const { return state_; }

private:
    std::vector<GridPos> goals_;
    GoalMode mode_;
    std::mt19937_64 rng_;
    std::size_t next_goal_ = 0;
    GridState state_;
    bool needs_reset_ = true;
};

}  // namespace vqrl::env
