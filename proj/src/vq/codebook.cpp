#include "vqrl/vq/codebook.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>

namespace vqrl::vq {

Codebook::Codebook(std::size_t size, std::size_t dim, std::mt19937_64& rng) {
    if (size == 0 || dim == 0) {
        throw std::invalid_argument("codebook needs at least one embedding of positive dimension");
    }
    std::uniform_real_distribution<double> init(-0.5, 0.5);
    std::vector<double> values(size * dim);
    for (double& v : values) {
        v = init(rng);
    }
    embeddings_ = ad::Tensor::from({size, dim}, std::move(values), true);
}

Codebook::Codebook(ad::Tensor embeddings) : embeddings_(std::move(embeddings)) {
    if (embeddings_.rank() != 2 || embeddings_.size() == 0) {
        throw ad::ShapeError("codebook", "embeddings must be a non-empty [K x D] tensor");
    }
    for (double v : embeddings_.values()) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("codebook: non-finite embedding value");
        }
    }
    if (!embeddings_.requires_grad()) {
        embeddings_.set_requires_grad(true);
    }
}

std::vector<double> Codebook::embedding(std::size_t k) const {
    const auto v = embeddings_.values();
    const auto first = v.begin() + static_cast<std::ptrdiff_t>(k * dim());
    return {first, first + static_cast<std::ptrdiff_t>(dim())};
}

nlohmann::json Codebook::to_json() const {
    const auto v = embeddings_.values();
    return {{"K", size()}, {"D", dim()}, {"values", std::vector<double>(v.begin(), v.end())}};
}

void Codebook::load_json(const nlohmann::json& record) {
    const auto k = record.at("K").get<std::size_t>();
    const auto d = record.at("D").get<std::size_t>();
    const auto values = record.at("values").get<std::vector<double>>();
    if (k != size() || d != dim() || values.size() != k * d) {
        throw ad::ShapeError("codebook.load_json", embeddings_.shape(), ad::Shape{k, d});
    }
    std::copy(values.begin(), values.end(), embeddings_.values().begin());
}

std::size_t nearest_embedding(std::span<const double> feature, const Codebook& codebook, double* distance) {
    const std::size_t dim = codebook.dim();
    if (feature.size() != dim) {
        throw ad::ShapeError("quantize", ad::Shape{feature.size()}, ad::Shape{dim});
    }
    if (codebook.size() == 0) {
        throw std::invalid_argument("quantize: empty codebook");
    }
    const auto e = codebook.embeddings().values();
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < codebook.size(); ++k) {
        double sq = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff = feature[j] - e[k * dim + j];
            sq += diff * diff;
        }
        if (sq < best_sq) {
            best_sq = sq;
            best = k;
        }
    }
    if (distance != nullptr) {
        *distance = std::sqrt(best_sq);
    }
    return best;
}

QuantizeResult quantize(ad::Graph& g, const ad::Tensor& features, const Codebook& codebook) {
    if (features.rank() != 2 || features.cols() != codebook.dim()) {
        throw ad::ShapeError("quantize", features.shape(), codebook.embeddings().shape());
    }
    const std::size_t batch = features.rows();
    const std::size_t dim = codebook.dim();
    const auto f = features.values();
    QuantizeResult result;
    result.indices.resize(batch);
    result.distances.resize(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const double* row = f.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::isfinite(row[j])) {
                throw std::invalid_argument("quantize: non-finite feature");
            }
        }
        result.indices[i] = nearest_embedding({row, dim}, codebook, &result.distances[i]);
    }
    result.selected = g.gather_rows(codebook.embeddings(), result.indices);
    result.quantized = g.straight_through(features, result.selected);
    return result;
}

ad::Tensor vq_encoding_loss(ad::Graph& g, const ad::Tensor& features, const QuantizeResult& result,
                            const VQHyper& hyper, const Codebook& codebook) {
    if (features.shape() != result.selected.shape()) {
        throw ad::ShapeError("vq_encoding_loss", features.shape(), result.selected.shape());
    }
    // ||sg[f] - e||^2 moves only the codebook; ||sg[e] - f||^2 only the encoder.
    const ad::Tensor codebook_term = g.row_sum(g.square(g.sub(g.stop_gradient(features), result.selected)));
    const ad::Tensor commitment =
        g.row_sum(g.square(g.sub(g.stop_gradient(result.selected), features)));
    ad::Tensor loss = g.mean(g.add(codebook_term, g.scale(commitment, hyper.beta)));
    if (hyper.lambda_reg != 0.0) {
        loss = g.add(loss, g.scale(reg_total(g, codebook, hyper), hyper.lambda_reg));
    }
    return loss;
}

ad::Tensor reg_repulsion(ad::Graph& g, const Codebook& codebook, double repulsion) {
    const std::size_t k = codebook.size();
    if (k < 2) {
        std::cerr << "warning: repulsion regularizer needs at least two embeddings; returning 0\n";
        return ad::Tensor::scalar(0.0);
    }
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            left.push_back(i);
            right.push_back(j);
        }
    }
    const auto& e = codebook.embeddings();
    const ad::Tensor dist = g.norm_l2(g.sub(g.gather_rows(e, left), g.gather_rows(e, right)));
    return g.sum(g.exp(g.scale(dist, -repulsion)));
}

ad::Tensor reg_box(ad::Graph& g, const Codebook& codebook) {
    const ad::Tensor sup = g.norm_linf(codebook.embeddings());
    return g.relu(g.add_scalar(g.max(g.square(sup)), -1.0));
}

ad::Tensor reg_total(ad::Graph& g, const Codebook& codebook, const VQHyper& hyper) {
    return g.add(reg_repulsion(g, codebook, hyper.repulsion), reg_box(g, codebook));
}

Utilization utilization(std::span<const std::size_t> assignments, std::size_t codebook_size) {
    Utilization u;
    u.counts.assign(codebook_size, 0);
    for (std::size_t k : assignments) {
        if (k >= codebook_size) {
            throw std::out_of_range("utilization: cluster index " + std::to_string(k) +
                                    " outside codebook of size " + std::to_string(codebook_size));
        }
        ++u.counts[k];
    }
    for (std::size_t c : u.counts) {
        u.used += c > 0 ? 1 : 0;
    }
    return u;
}

}  // namespace vqrl::vq
