#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "vqrl/autodiff/gradcheck.hpp"
#include "vqrl/policy/model.hpp"
#include "vqrl/policy/policy_net.hpp"

using namespace vqrl;
using ad::Graph;
using ad::Tensor;

namespace {

policy::PolicyBundle make_bundle(std::size_t obs, std::size_t d, std::size_t actions, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return policy::PolicyBundle(policy::NetworkShape{obs, 8, d, actions}, rng);
}

void zero_all(policy::PolicyBundle& b) {
    for (auto& p : b.parameters()) {
        for (double& v : p.values()) {
            v = 0.0;
        }
    }
}

void set_classifier(policy::PolicyBundle& b, const std::vector<double>& weight, const std::vector<double>& bias) {
    for (auto& np : b.named_parameters()) {
        if (np.name == "classifier.weight") {
            std::copy(weight.begin(), weight.end(), np.tensor.values().begin());
        } else if (np.name == "classifier.bias") {
            std::copy(bias.begin(), bias.end(), np.tensor.values().begin());
        }
    }
}

}  // namespace

TEST(PolicyNet, ZeroWeightsGiveZeroFeatures) {
    auto b = make_bundle(4, 16, 2, 1);
    zero_all(b);
    Graph g;
    const Tensor f = b.extract_features(g, Tensor::from({1, 4}, {0.3, -1.0, 0.02, 2.0}));
    ASSERT_EQ(f.cols(), 16u);
    for (double v : f.values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(PolicyNet, DeterministicFeaturesAndShapes) {
    const auto b = make_bundle(4, 16, 2, 3);
    Graph g;
    const Tensor obs = Tensor::from({2, 4}, {0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4});
    const Tensor f = b.extract_features(g, obs);
    for (std::size_t j = 0; j < 16; ++j) {
        EXPECT_EQ(f.at(0, j), f.at(1, j));
    }
    EXPECT_EQ(b.value(g, f).cols(), 1u);
    EXPECT_EQ(b.policy_logits(g, f).cols(), 2u);
    EXPECT_THROW(b.extract_features(g, Tensor::zeros({1, 5})), ad::ShapeError);
}

TEST(PolicyNet, ArgmaxTiesToLowestIndex) {
    EXPECT_EQ(policy::argmax(std::vector<double>{0.1, 2.0}), 1u);
    EXPECT_EQ(policy::argmax(std::vector<double>{0.2, -1.0, 3.0}), 2u);
    EXPECT_EQ(policy::argmax(std::vector<double>{1.0, 1.0, 0.0}), 0u);
}

TEST(PolicyNet, EqualLogitsGiveUniformProbabilities) {
    auto b = make_bundle(4, 16, 3, 5);
    zero_all(b);
    const auto s = policy::act(b, std::vector<double>{0.0, 0.0, 0.0, 0.0}, nullptr);
    EXPECT_NEAR(s.log_prob, std::log(1.0 / 3.0), 1e-15);
    EXPECT_NEAR(s.entropy, std::log(3.0), 1e-15);
    EXPECT_EQ(s.action, 0u);
}

TEST(PolicyNet, SamplingFrequencyOfEqualLogits) {
    auto b = make_bundle(4, 16, 2, 6);
    zero_all(b);
    std::mt19937_64 rng(12);
    const Tensor obs = Tensor::zeros({10000, 4});
    const auto samples = policy::act(b, obs, &rng);
    std::size_t zeros = 0;
    for (const auto& s : samples) {
        zeros += s.action == 0 ? 1 : 0;
        EXPECT_NEAR(s.log_prob, std::log(0.5), 1e-15);
    }
    // 3 sigma of Binomial(10000, 0.5) is 0.015.
    EXPECT_GE(zeros / 10000.0, 0.47);
    EXPECT_LE(zeros / 10000.0, 0.53);
}

TEST(PolicyNet, NonFiniteLogitsThrow) {
    auto b = make_bundle(4, 16, 2, 7);
    EXPECT_ANY_THROW(policy::act(b, std::vector<double>{NAN, 0.0, 0.0, 0.0}, nullptr));
}

TEST(ClassificationLoss, UniformLogitsGiveLogN) {
    auto b = make_bundle(4, 16, 3, 8);
    zero_all(b);
    Graph g;
    const Tensor e = Tensor::from({1, 16}, std::vector<double>(16, 0.3));
    const Tensor logits = Tensor::from({1, 3}, {0.1, 0.5, -0.2});
    EXPECT_NEAR(policy::classification_loss(g, b, e, logits).item(), std::log(3.0), 1e-12);
}

TEST(ClassificationLoss, SaturatedCorrectLogitIsNearZero) {
    auto b = make_bundle(2, 2, 3, 9);
    zero_all(b);
    set_classifier(b, std::vector<double>(6, 0.0), {0.0, 1e6, 0.0});
    Graph g;
    const Tensor e = Tensor::from({1, 2}, {0.1, 0.2});
    const Tensor logits = Tensor::from({1, 3}, {0.0, 4.0, 1.0});
    EXPECT_NEAR(policy::classification_loss(g, b, e, logits).item(), 0.0, 1e-12);
}

TEST(ClassificationLoss, NoGradientIntoPolicyLogits) {
    auto b = make_bundle(4, 6, 3, 10);
    Tensor logits = Tensor::from({2, 3}, {0.3, 1.0, -1.0, 2.0, 0.0, 0.1}, true);
    Tensor e = Tensor::from({2, 6}, std::vector<double>(12, 0.25), true);
    Graph g;
    g.backward(policy::classification_loss(g, b, e, logits));
    for (double v : logits.grad()) {
        EXPECT_EQ(v, 0.0);
    }
    double norm = 0.0;
    for (double v : e.grad()) {
        norm += std::abs(v);
    }
    EXPECT_GT(norm, 0.0);
}

TEST(ClassificationLoss, LabelInvariantToPositiveScaling) {
    auto b = make_bundle(4, 6, 3, 11);
    const Tensor e = Tensor::from({1, 6}, {0.1, -0.2, 0.3, 0.0, 0.5, -0.4});
    Graph g;
    const double a = policy::classification_loss(g, b, e, Tensor::from({1, 3}, {0.3, 1.1, -0.7})).item();
    const double c = policy::classification_loss(g, b, e, Tensor::from({1, 3}, {3.0, 11.0, -7.0})).item();
    EXPECT_EQ(a, c);
}

TEST(ClassificationLoss, GradientCheck) {
    std::mt19937_64 rng(14);
    auto b = make_bundle(4, 6, 3, 15);
    std::normal_distribution<double> n;
    std::vector<double> ev(18);
    for (double& x : ev) {
        x = n(rng);
    }
    Tensor e = Tensor::from({3, 6}, ev, true);
    const Tensor logits = Tensor::from({3, 3}, {0.3, 1.0, -1.0, 2.0, 0.0, 0.1, -0.5, -0.4, 0.9});
    auto params = b.parameters();
    params.push_back(e);
    auto loss = [&](Graph& g) { return policy::classification_loss(g, b, e, logits); };
    EXPECT_LE(ad::finite_difference_check(loss, params).max_relative_error, 1e-4);
}

TEST(PredictedClusterAction, Argmax) {
    auto b = make_bundle(2, 2, 3, 16);
    zero_all(b);
    set_classifier(b, std::vector<double>(6, 0.0), {0.2, -1.0, 3.0});
    EXPECT_EQ(policy::predicted_cluster_action(b, std::vector<double>{0.4, 0.1}), 2u);
    set_classifier(b, std::vector<double>(6, 0.0), {1.0, 1.0, 0.0});
    EXPECT_EQ(policy::predicted_cluster_action(b, std::vector<double>{0.4, 0.1}), 0u);
}

TEST(Checkpoint, SaveLoadRoundTrip) {
    std::mt19937_64 rng(17);
    const auto model = policy::Model::create(policy::NetworkShape{4, 8, 16, 2}, 8, rng);
    const nlohmann::json config = {{"name", "x"}, {"seed", 3}};
    const policy::Checkpoint meta{config, policy::config_hash(config), 1234};
    const auto path = std::filesystem::temp_directory_path() / "vqrl_test_ckpt.json";
    policy::save_checkpoint(path, model, meta);
    policy::Checkpoint back;
    const auto loaded = policy::load_checkpoint(path, &back);
    EXPECT_EQ(back.timestep, 1234);
    EXPECT_EQ(back.config_hash, meta.config_hash);
    const auto a = model.parameters();
    const auto c = loaded.parameters();
    ASSERT_EQ(a.size(), c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[i].size(); ++j) {
            EXPECT_EQ(a[i].at(j), c[i].at(j));
        }
    }
    std::filesystem::remove(path);
}

TEST(Checkpoint, ConfigHashIsStableAndSensitive) {
    const nlohmann::json a = {{"seed", 1}, {"name", "run"}};
    const nlohmann::json b = {{"name", "run"}, {"seed", 1}};
    const nlohmann::json c = {{"name", "run"}, {"seed", 2}};
    EXPECT_EQ(policy::config_hash(a), policy::config_hash(b));
    EXPECT_NE(policy::config_hash(a), policy::config_hash(c));
    EXPECT_EQ(policy::config_hash(a).size(), 16u);
}

TEST(Model, CloneIsDeep) {
    std::mt19937_64 rng(18);
    auto model = policy::Model::create(policy::NetworkShape{4, 8, 16, 2}, 8, rng);
    auto copy = model.clone();
    model.parameters().front().values()[0] += 1.0;
    EXPECT_NE(model.parameters().front().at(0), copy.parameters().front().at(0));
}
