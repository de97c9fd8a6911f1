#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "vqrl/autodiff/graph.hpp"
#include "vqrl/autodiff/serialize.hpp"

namespace vqrl::policy {

/// Dense layer y = x W + b with W of shape [in x out].
struct Linear {
    ad::Tensor weight;
    ad::Tensor bias;

    /// Orthogonal weights scaled by gain, zero bias.
    static Linear orthogonal(std::size_t in, std::size_t out, double gain, std::mt19937_64& rng);
    ad::Tensor forward(ad::Graph& g, const ad::Tensor& x) const;
};

struct NetworkShape {
    std::size_t observation_size = 4;
    std::size_t hidden = 64;
    std::size_t feature_size = 16;  ///< D; must equal the codebook dimension
    std::size_t actions = 2;        ///< N_a
};

/// Feature extractor E, policy head, value head and classification net C.
///
/// The policy and value heads read the continuous feature E(x); only the
/// classifier reads the quantized embedding.
class PolicyBundle {
public:
    PolicyBundle(NetworkShape shape, std::mt19937_64& rng);

    const NetworkShape& shape() const { return shape_; }

    /// [B x obs] -> [B x D], tanh after every layer.
    ad::Tensor extract_features(ad::Graph& g, const ad::Tensor& observations) const;
    ad::Tensor policy_logits(ad::Graph& g, const ad::Tensor& features) const;
    /// [B x 1]
    ad::Tensor value(ad::Graph& g, const ad::Tensor& features) const;
    ad::Tensor classifier_logits(ad::Graph& g, const ad::Tensor& embedding) const;

    std::vector<ad::NamedParameter> named_parameters() const;
    std::vector<ad::Tensor> parameters() const;

private:
    NetworkShape shape_;
    Linear encoder1_;
    Linear encoder2_;
    Linear encoder3_;
    Linear policy_head_;
    Linear value_head_;
    Linear classifier_;
};

struct ActionSample {
    std::size_t action = 0;
    double log_prob = 0.0;
    double value = 0.0;
    double entropy = 0.0;
};

/// Index of the largest entry; lowest index on ties.
std::size_t argmax(std::span<const double> values);

/// Samples one action per row of `observations` from softmax(policy logits),
/// or takes the argmax when `rng` is null. Throws on non-finite logits.
std::vector<ActionSample> act(const PolicyBundle& bundle, const ad::Tensor& observations,
                              std::mt19937_64* rng);
ActionSample act(const PolicyBundle& bundle, std::span<const double> observation, std::mt19937_64* rng);

/// Mean softmax cross-entropy between C(embedding) and the one-hot argmax of
/// stop_gradient(policy_logits).
ad::Tensor classification_loss(ad::Graph& g, const PolicyBundle& bundle, const ad::Tensor& embedding,
                               const ad::Tensor& policy_logits);

/// argmax of C(embedding).
std::size_t predicted_cluster_action(const PolicyBundle& bundle, std::span<const double> embedding);

}  // namespace vqrl::policy
