#include "vqrl/policy/model.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace vqrl::policy {

Model Model::create(const NetworkShape& shape, std::size_t codebook_size, std::mt19937_64& rng) {
    PolicyBundle net(shape, rng);
    vq::Codebook codebook(codebook_size, shape.feature_size, rng);
    return Model{std::move(net), std::move(codebook)};
}

Model Model::clone() const {
    std::mt19937_64 unused(0);
    Model copy = create(net.shape(), codebook.size(), unused);
    const auto src = net.named_parameters();
    auto dst = copy.net.named_parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto v = src[i].tensor.values();
        std::copy(v.begin(), v.end(), dst[i].tensor.values().begin());
    }
    const auto e = codebook.embeddings().values();
    std::copy(e.begin(), e.end(), copy.codebook.embeddings().values().begin());
    return copy;
}

std::vector<ad::Tensor> Model::parameters() const {
    auto out = net.parameters();
    out.push_back(codebook.embeddings());
    return out;
}

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json checkpoint_to_json(const Model& model, const Checkpoint& meta) {
    const auto& s = model.net.shape();
    return {
        {"format", "vqrl-checkpoint-1"},
        {"config_hash", meta.config_hash},
        {"config", meta.config},
        {"timestep", meta.timestep},
        {"network",
         {{"observation_size", s.observation_size},
          {"hidden", s.hidden},
          {"feature_size", s.feature_size},
          {"actions", s.actions}}},
        {"params", ad::parameters_to_json(model.net.named_parameters())},
        {"codebook", model.codebook.to_json()},
    };
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Checkpoint& meta) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write checkpoint " + path.string());
    }
    out << checkpoint_to_json(model, meta).dump() << '\n';
}

Model model_from_json(const nlohmann::json& doc, Checkpoint* meta) {
    if (doc.value("format", "") != "vqrl-checkpoint-1") {
        throw std::invalid_argument("not a vqrl checkpoint");
    }
    const auto& n = doc.at("network");
    NetworkShape shape;
    shape.observation_size = n.at("observation_size").get<std::size_t>();
    shape.hidden = n.at("hidden").get<std::size_t>();
    shape.feature_size = n.at("feature_size").get<std::size_t>();
    shape.actions = n.at("actions").get<std::size_t>();
    std::mt19937_64 unused(0);
    Model model = Model::create(shape, doc.at("codebook").at("K").get<std::size_t>(), unused);
    auto named = model.net.named_parameters();
    ad::load_parameters(doc.at("params"), named);
    model.codebook.load_json(doc.at("codebook"));
    if (meta != nullptr) {
        meta->config = doc.value("config", nlohmann::json::object());
        meta->config_hash = doc.value("config_hash", "");
        meta->timestep = doc.value("timestep", std::int64_t{0});
    }
    return model;
}

Model load_checkpoint(const std::filesystem::path& path, Checkpoint* meta) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read checkpoint " + path.string());
    }
    return model_from_json(nlohmann::json::parse(in), meta);
}

}  // namespace vqrl::policy
