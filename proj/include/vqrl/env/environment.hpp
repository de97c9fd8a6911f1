#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace vqrl::env {

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminated = false;  ///< reached a terminal state
    bool truncated = false;   ///< hit the step limit
    bool done() const { return terminated || truncated; }
};

/// Episodic discrete-action environment. Each instance owns its random
/// stream and shares no state with other instances.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::size_t observation_size() const = 0;
    virtual std::size_t action_count() const = 0;
    virtual std::vector<double> reset() = 0;
    virtual StepResult step(std::size_t action) = 0;
    virtual std::string name() const = 0;
};

using EnvironmentPtr = std::unique_ptr<Environment>;

}  // namespace vqrl::env
