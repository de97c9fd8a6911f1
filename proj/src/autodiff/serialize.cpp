#include "vqrl/autodiff/serialize.hpp"

#include <algorithm>
#include <stdexcept>

namespace vqrl::ad {

nlohmann::json parameters_to_json(const std::vector<NamedParameter>& params) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : params) {
        const auto values = p.tensor.values();
        out.push_back({{"name", p.name},
                       {"shape", p.tensor.shape()},
                       {"values", std::vector<double>(values.begin(), values.end())}});
    }
    return out;
}

void load_parameters(const nlohmann::json& records, std::vector<NamedParameter>& params) {
    if (!records.is_array()) {
        throw std::invalid_argument("parameter records must be a JSON array");
    }
    for (auto& p : params) {
        const auto it = std::find_if(records.begin(), records.end(),
                                     [&](const nlohmann::json& r) { return r.at("name") == p.name; });
        if (it == records.end()) {
            throw std::invalid_argument("checkpoint lacks parameter '" + p.name + "'");
        }
        const auto shape = it->at("shape").get<Shape>();
        const auto values = it->at("values").get<std::vector<double>>();
        if (shape != p.tensor.shape() || values.size() != p.tensor.size()) {
            throw ShapeError("load_parameters(" + p.name + ")", p.tensor.shape(), shape);
        }
        std::copy(values.begin(), values.end(), p.tensor.values().begin());
    }
}

}  // namespace vqrl::ad
