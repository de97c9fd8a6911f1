#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqrl/autodiff/graph.hpp"

namespace vqrl::vq {

/// K learnable embedding vectors of dimension D, stored as one [K x D] tensor.
class Codebook {
public:
    /// Coordinates drawn i.i.d. uniform on [-0.5, 0.5].
    Codebook(std::size_t size, std::size_t dim, std::mt19937_64& rng);
    explicit Codebook(ad::Tensor embeddings);

    std::size_t size() const { return embeddings_.rows(); }
    std::size_t dim() const { return embeddings_.cols(); }

    const ad::Tensor& embeddings() const { return embeddings_; }
    ad::Tensor& embeddings() { return embeddings_; }
    std::vector<double> embedding(std::size_t k) const;

    /// {"K": K, "D": D, "values": [K*D row-major]}
    nlohmann::json to_json() const;
    void load_json(const nlohmann::json& record);

private:
    ad::Tensor embeddings_;
};

struct VQHyper {
    double beta = 0.25;        ///< commitment weight
    double repulsion = 5.0;    ///< C_d in the pairwise repulsion term
    double lambda_reg = 0.1;   ///< weight of the codebook regularizer
};

/// Nearest embedding for every row of a [B x D] feature batch.
struct QuantizeResult {
    std::vector<std::size_t> indices;  ///< 0-based codebook rows
    std::vector<double> distances;     ///< ||feature - e_k||_2
    /// e_k rows gathered from the codebook; gradients reach the codebook.
    ad::Tensor selected;
    /// feature + sg(e_k - feature): forward value e_k, gradient passes
    /// straight through to the feature.
    ad::Tensor quantized;
};

/// Index of the nearest embedding, lowest index on ties. No graph involved.
std::size_t nearest_embedding(std::span<const double> feature, const Codebook& codebook,
                              double* distance = nullptr);

QuantizeResult quantize(ad::Graph& g, const ad::Tensor& features, const Codebook& codebook);

/// Mean over the batch of ||sg[f] - e_k||^2 + beta ||sg[e_k] - f||^2, plus
/// lambda_reg times the codebook regularizer.
ad::Tensor vq_encoding_loss(ad::Graph& g, const ad::Tensor& features, const QuantizeResult& result,
                            const VQHyper& hyper, const Codebook& codebook);

/// Sum over unordered pairs i < j of exp(-C_d ||e_i - e_j||_2).
ad::Tensor reg_repulsion(ad::Graph& g, const Codebook& codebook, double repulsion);

/// max_i(||e_i||_inf^2 - 1, 0).
ad::Tensor reg_box(ad::Graph& g, const Codebook& codebook);

ad::Tensor reg_total(ad::Graph& g, const Codebook& codebook, const VQHyper& hyper);

struct Utilization {
    std::vector<std::size_t> counts;
    std::size_t used = 0;
};

Utilization utilization(std::span<const std::size_t> assignments, std::size_t codebook_size);

}  // namespace vqrl::vq
