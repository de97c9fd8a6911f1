#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "vqrl/policy/policy_net.hpp"
#include "vqrl/vq/codebook.hpp"

namespace vqrl::policy {

/// Network plus codebook: everything a checkpoint restores.
struct Model {
    PolicyBundle net;
    vq::Codebook codebook;

    /// Network first, then the codebook, from one stream.
    static Model create(const NetworkShape& shape, std::size_t codebook_size, std::mt19937_64& rng);

    /// Deep copy; the result shares no storage with *this.
    Model clone() const;
    /// Every trainable tensor, codebook last.
    std::vector<ad::Tensor> parameters() const;
};

struct Checkpoint {
    nlohmann::json config;
    std::string config_hash;
    std::int64_t timestep = 0;
};

/// FNV-1a over the compact dump of `config`, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

nlohmann::json checkpoint_to_json(const Model& model, const Checkpoint& meta);
void save_checkpoint(const std::filesystem::path& path, const Model& model, const Checkpoint& meta);
/// Rebuilds the model from the stored network shape and codebook size.
Model load_checkpoint(const std::filesystem::path& path, Checkpoint* meta = nullptr);
Model model_from_json(const nlohmann::json& doc, Checkpoint* meta = nullptr);

}  // namespace vqrl::policy
