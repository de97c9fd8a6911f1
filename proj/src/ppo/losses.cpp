#include "vqrl/ppo/losses.hpp"

namespace vqrl::ppo {
namespace {

ad::Tensor column(std::vector<double> values) {
    const std::size_t n = values.size();
    return ad::Tensor::from({n, 1}, std::move(values));
}

}  // namespace

PpoTerms ppo_loss_from_heads(ad::Graph& g, const ad::Tensor& logits, const ad::Tensor& values,
                             const Minibatch& mb, const TrainConfig& config) {
    const ad::Tensor log_probs = g.log_softmax(logits);
    const ad::Tensor new_log_prob = g.gather(log_probs, mb.actions);
    const ad::Tensor ratio = g.exp(g.sub(new_log_prob, column(mb.old_log_probs)));
    const ad::Tensor adv = column(mb.advantages);
    const ad::Tensor unclipped = g.mul(ratio, adv);
    const ad::Tensor clipped = g.mul(g.clamp(ratio, 1.0 - config.clip, 1.0 + config.clip), adv);

    PpoTerms terms;
    terms.surrogate = g.neg(g.mean(g.minimum(unclipped, clipped)));
    terms.value_mse = g.mean(g.square(g.sub(values, column(mb.returns))));
    terms.entropy = g.neg(g.mean(g.row_sum(g.mul(g.softmax(logits), log_probs))));
    terms.total = g.sub(g.add(terms.surrogate, g.scale(terms.value_mse, config.value_coef)),
                        g.scale(terms.entropy, config.entropy_coef));
    return terms;
}

PpoTerms ppo_loss(ad::Graph& g, const Minibatch& mb, const policy::PolicyBundle& bundle,
                  const TrainConfig& config) {
    const ad::Tensor features = bundle.extract_features(g, mb.observations);
    return ppo_loss_from_heads(g, bundle.policy_logits(g, features), bundle.value(g, features), mb, config);
}

ad::Tensor total_loss(ad::Graph& g, const Minibatch& mb, const policy::Model& model, const TrainConfig& config,
                      LossBreakdown* breakdown) {
    const auto& bundle = model.net;
    const ad::Tensor features = bundle.extract_features(g, mb.observations);
    const ad::Tensor logits = bundle.policy_logits(g, features);
    const PpoTerms rl = ppo_loss_from_heads(g, logits, bundle.value(g, features), mb, config);
    if (breakdown != nullptr) {
        breakdown->rl = rl.total.item();
    }
    if (!config.uses_vq()) {
        if (breakdown != nullptr) {
            breakdown->total = rl.total.item();
        }
        return rl.total;
    }

    const vq::QuantizeResult q = vq::quantize(g, features, model.codebook);
    const ad::Tensor enc = vq::vq_encoding_loss(g, features, q, config.vq, model.codebook);
    // Forward value is e_k exactly; L_class reaches both the selected entry
    // and, straight through, the encoder.
    const ad::Tensor cls_input = g.add(q.selected, g.sub(features, g.stop_gradient(features)));
    const ad::Tensor cls = policy::classification_loss(g, bundle, cls_input, logits);
    const ad::Tensor total =
        g.add(g.add(rl.total, g.scale(enc, config.lambda_vq_enc)), g.scale(cls, config.lambda_class));

    if (breakdown != nullptr) {
        ad::Graph probe(ad::GradMode::Disabled);
        breakdown->vq_enc = enc.item();
        breakdown->cls = cls.item();
        breakdown->total = total.item();
        double commitment = 0.0;
        for (double d : q.distances) {
            commitment += d * d;
        }
        breakdown->commitment = q.distances.empty() ? 0.0 : commitment / static_cast<double>(q.distances.size());
        breakdown->d1 = vq::reg_repulsion(probe, model.codebook, config.vq.repulsion).item();
        breakdown->d2 = vq::reg_box(probe, model.codebook).item();
        breakdown->assignments = q.indices;
    }
    return total;
}

}  // namespace vqrl::ppo
