#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqrl/autodiff/tensor.hpp"

namespace vqrl::ad {

struct NamedParameter {
    std::string name;
    Tensor tensor;
};

/// [{"name": ..., "shape": [...], "values": [...]}, ...]
nlohmann::json parameters_to_json(const std::vector<NamedParameter>& params);

/// Copies values from `records` into the matching tensors in place. Every
/// parameter must be present with the same shape.
void load_parameters(const nlohmann::json& records, std::vector<NamedParameter>& params);

}  // namespace vqrl::ad
