#include "vqrl/policy/policy_net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vqrl::policy {
namespace {

// Gram-Schmidt over the shorter side of a Gaussian matrix.
std::vector<double> orthogonal_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool by_columns = rows >= cols;
    const std::size_t count = by_columns ? cols : rows;
    const std::size_t length = by_columns ? rows : cols;
    std::vector<std::vector<double>> basis;
    basis.reserve(count);
    while (basis.size() < count) {
        std::vector<double> v(length);
        for (double& x : v) {
            x = normal(rng);
        }
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < length; ++i) {
                dot += v[i] * b[i];
            }
            for (std::size_t i = 0; i < length; ++i) {
                v[i] -= dot * b[i];
            }
        }
        double norm = 0.0;
        for (double x : v) {
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-8) {
            continue;
        }
        for (double& x : v) {
            x /= norm;
        }
        basis.push_back(std::move(v));
    }
    std::vector<double> out(rows * cols);
    for (std::size_t a = 0; a < count; ++a) {
        for (std::size_t i = 0; i < length; ++i) {
            if (by_columns) {
                out[i * cols + a] = basis[a][i];
            } else {
                out[a * cols + i] = basis[a][i];
            }
        }
    }
    return out;
}

}  // namespace

Linear Linear::orthogonal(std::size_t in, std::size_t out, double gain, std::mt19937_64& rng) {
    auto w = orthogonal_matrix(in, out, rng);
    for (double& x : w) {
        x *= gain;
    }
    return Linear{ad::Tensor::from({in, out}, std::move(w), true), ad::Tensor::zeros({1, out}, true)};
}

ad::Tensor Linear::forward(ad::Graph& g, const ad::Tensor& x) const {
    return g.add(g.matmul(x, weight), bias);
}

PolicyBundle::PolicyBundle(NetworkShape shape, std::mt19937_64& rng)
    : shape_(shape),
      encoder1_(Linear::orthogonal(shape.observation_size, shape.hidden, std::sqrt(2.0), rng)),
      encoder2_(Linear::orthogonal(shape.hidden, shape.hidden, std::sqrt(2.0), rng)),
      encoder3_(Linear::orthogonal(shape.hidden, shape.feature_size, std::sqrt(2.0), rng)),
      policy_head_(Linear::orthogonal(shape.feature_size, shape.actions, 0.01, rng)),
      value_head_(Linear::orthogonal(shape.feature_size, 1, 1.0, rng)),
      classifier_(Linear::orthogonal(shape.feature_size, shape.actions, 0.01, rng)) {
    if (shape.observation_size == 0 || shape.hidden == 0 || shape.feature_size == 0 || shape.actions < 2) {
        throw std::invalid_argument("policy network needs positive sizes and at least two actions");
    }
}

ad::Tensor PolicyBundle::extract_features(ad::Graph& g, const ad::Tensor& observations) const {
    if (observations.rank() != 2 || observations.cols() != shape_.observation_size) {
        throw ad::ShapeError("extract_features", observations.shape(),
                             ad::Shape{observations.rows(), shape_.observation_size});
    }
    ad::Tensor h = g.tanh(encoder1_.forward(g, observations));
    h = g.tanh(encoder2_.forward(g, h));
    return g.tanh(encoder3_.forward(g, h));
}

ad::Tensor PolicyBundle::policy_logits(ad::Graph& g, const ad::Tensor& features) const {
    return policy_head_.forward(g, features);
}

ad::Tensor PolicyBundle::value(ad::Graph& g, const ad::Tensor& features) const {
    return value_head_.forward(g, features);
}

ad::Tensor PolicyBundle::classifier_logits(ad::Graph& g, const ad::Tensor& embedding) const {
    return classifier_.forward(g, embedding);
}

std::vector<ad::NamedParameter> PolicyBundle::named_parameters() const {
    return {
        {"encoder.0.weight", encoder1_.weight},   {"encoder.0.bias", encoder1_.bias},
        {"encoder.1.weight", encoder2_.weight},   {"encoder.1.bias", encoder2_.bias},
        {"encoder.2.weight", encoder3_.weight},   {"encoder.2.bias", encoder3_.bias},
        {"policy.weight", policy_head_.weight},   {"policy.bias", policy_head_.bias},
        {"value.weight", value_head_.weight},     {"value.bias", value_head_.bias},
        {"classifier.weight", classifier_.weight}, {"classifier.bias", classifier_.bias},
    };
}

std::vector<ad::Tensor> PolicyBundle::parameters() const {
    std::vector<ad::Tensor> out;
    for (auto& p : named_parameters()) {
        out.push_back(p.tensor);
    }
    return out;
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<ActionSample> act(const PolicyBundle& bundle, const ad::Tensor& observations,
                              std::mt19937_64* rng) {
    ad::Graph g(ad::GradMode::Disabled);
    const ad::Tensor features = bundle.extract_features(g, observations);
    const ad::Tensor log_probs = g.log_softmax(bundle.policy_logits(g, features));
    const ad::Tensor values = bundle.value(g, features);

    const std::size_t n = observations.rows();
    const std::size_t actions = bundle.shape().actions;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<ActionSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::span<const double> lp = log_probs.values().subspan(i * actions, actions);
        double entropy = 0.0;
        for (double l : lp) {
            if (!std::isfinite(l)) {
                throw std::domain_error("act: non-finite policy logits");
            }
            entropy -= std::exp(l) * l;
        }
        std::size_t choice = argmax(lp);
        if (rng != nullptr) {
            const double u = uniform(*rng);
            double cumulative = 0.0;
            choice = actions - 1;
            for (std::size_t a = 0; a < actions; ++a) {
                cumulative += std::exp(lp[a]);
                if (u < cumulative) {
                    choice = a;
                    break;
                }
            }
        }
        out[i] = ActionSample{choice, lp[choice], values.at(i), entropy};
    }
    return out;
}

ActionSample act(const PolicyBundle& bundle, std::span<const double> observation, std::mt19937_64* rng) {
    const ad::Tensor obs = ad::Tensor::row({observation.begin(), observation.end()});
    return act(bundle, obs, rng).front();
}

ad::Tensor classification_loss(ad::Graph& g, const PolicyBundle& bundle, const ad::Tensor& embedding,
                               const ad::Tensor& policy_logits) {
    if (policy_logits.rank() != 2 || policy_logits.rows() != embedding.rows()) {
        throw ad::ShapeError("classification_loss", embedding.shape(), policy_logits.shape());
    }
    const ad::Tensor frozen = g.stop_gradient(policy_logits);
    const std::size_t actions = frozen.cols();
    std::vector<std::size_t> labels(frozen.rows());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = argmax(frozen.values().subspan(i * actions, actions));
    }
    const ad::Tensor log_probs = g.log_softmax(bundle.classifier_logits(g, embedding));
    return g.neg(g.mean(g.gather(log_probs, std::move(labels))));
}

std::size_t predicted_cluster_action(const PolicyBundle& bundle, std::span<const double> embedding) {
    ad::Graph g(ad::GradMode::Disabled);
    const ad::Tensor logits =
        bundle.classifier_logits(g, ad::Tensor::row({embedding.begin(), embedding.end()}));
    return argmax(logits.values());
}

}  // namespace vqrl::policy
