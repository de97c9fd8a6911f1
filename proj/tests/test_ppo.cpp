#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vqrl/autodiff/gradcheck.hpp"
#include "vqrl/ppo/config.hpp"
#include "vqrl/ppo/losses.hpp"
#include "vqrl/ppo/rollout.hpp"
#include "vqrl/ppo/seeds.hpp"
#include "vqrl/ppo/trainer.hpp"

using namespace vqrl;
using ad::Graph;
using ad::Tensor;

namespace {

// Direct recursion: delta_t = r_t + gamma V_{t+1} (1 - d_t) - V_t,
// A_t = delta_t + gamma lambda (1 - d_t) A_{t+1}.
std::vector<double> brute_gae(const std::vector<double>& r, const std::vector<double>& v,
                              const std::vector<bool>& d, double boot, double gamma, double lambda) {
    const std::size_t n = r.size();
    std::vector<double> a(n);
    for (std::size_t t = 0; t < n; ++t) {
        // Sum the discounted deltas forward until the episode ends.
        double acc = 0.0;
        double w = 1.0;
        for (std::size_t u = t; u < n; ++u) {
            const double next = u + 1 < n ? v[u + 1] : boot;
            const double delta = r[u] + (d[u] ? 0.0 : gamma * next) - v[u];
            acc += w * delta;
            if (d[u]) {
                break;
            }
            w *= gamma * lambda;
        }
        a[t] = acc;
    }
    return a;
}

ppo::TrainConfig tiny_config(ppo::Variant variant) {
    ppo::TrainConfig c;
    c.variant = variant;
    c.workers = 2;
    c.steps_per_worker = 32;
    c.minibatch = 16;
    c.epochs = 2;
    c.total_timesteps = 256;
    c.eval_every = 0;
    c.keep_best = false;
    c.seed = 7;
    return c.resolved();
}

ppo::Minibatch random_minibatch(std::size_t n, std::size_t obs, std::size_t actions, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<std::size_t> a(0, actions - 1);
    ppo::Minibatch mb;
    std::vector<double> o(n * obs);
    for (double& x : o) {
        x = g(rng);
    }
    mb.observations = Tensor::from({n, obs}, o);
    for (std::size_t i = 0; i < n; ++i) {
        mb.actions.push_back(a(rng));
        mb.old_log_probs.push_back(std::log(1.0 / static_cast<double>(actions)) + 0.3 * g(rng));
        mb.advantages.push_back(g(rng));
        mb.returns.push_back(g(rng));
    }
    return mb;
}

}  // namespace

TEST(Gae, OneStepTerminal) {
    const std::vector<double> r = {1.0}, v = {0.4};
    const auto a = ppo::compute_gae(r, v, {true}, 123.0, 0.99, 0.95);
    EXPECT_DOUBLE_EQ(a[0], 0.6);
}

TEST(Gae, OneStepBootstrap) {
    const std::vector<double> r = {1.0}, v = {0.4};
    const auto a = ppo::compute_gae(r, v, {false}, 2.0, 0.5, 0.95);
    EXPECT_DOUBLE_EQ(a[0], 1.0 + 0.5 * 2.0 - 0.4);
}

TEST(Gae, GeometricSeriesWithZeroValues) {
    // Reward 1 forever with gamma = lambda-weight 0.5: A_0 -> 2.
    const std::size_t n = 60;
    const std::vector<double> r(n, 1.0), v(n, 0.0);
    const auto a = ppo::compute_gae(r, v, std::vector<bool>(n, false), 0.0, 0.5, 1.0);
    EXPECT_NEAR(a[0], 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(a[n - 1], 1.0);
}

TEST(Gae, MatchesDirectRecursion) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::bernoulli_distribution done(0.15);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 40;
        std::vector<double> r(n), v(n);
        std::vector<bool> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = g(rng);
            v[i] = g(rng);
            d[i] = done(rng);
        }
        const double boot = g(rng);
        const auto a = ppo::compute_gae(r, v, d, boot, 0.99, 0.95);
        const auto b = brute_gae(r, v, d, boot, 0.99, 0.95);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-10);
        }
    }
}

TEST(Gae, LengthMismatchThrows) {
    const std::vector<double> r = {1.0, 2.0}, v = {0.4};
    EXPECT_ANY_THROW(ppo::compute_gae(r, v, {false, false}, 0.0, 0.99, 0.95));
}

TEST(Advantages, Normalization) {
    std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
    ppo::normalize_advantages(a);
    double mean = 0.0, var = 0.0;
    for (double x : a) {
        mean += x / 4.0;
    }
    for (double x : a) {
        var += (x - mean) * (x - mean) / 4.0;
    }
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-6);
    EXPECT_LT(a[0], a[3]);
}

TEST(PpoLoss, MatchesReferenceFormula) {
    const Tensor logits = Tensor::from({2, 2}, {0.2, -0.3, 1.0, 0.5});
    const Tensor values = Tensor::from({2, 1}, {0.1, -0.4});
    ppo::Minibatch mb;
    mb.actions = {0, 1};
    mb.old_log_probs = {std::log(0.4), std::log(0.45)};
    mb.advantages = {1.5, -0.7};
    mb.returns = {1.0, 0.2};
    ppo::TrainConfig cfg;
    Graph g;
    const auto t = ppo::ppo_loss_from_heads(g, logits, values, mb, cfg);

    double surr = 0.0, vmse = 0.0, ent = 0.0;
    const double lg[2][2] = {{0.2, -0.3}, {1.0, 0.5}};
    const double val[2] = {0.1, -0.4};
    for (int i = 0; i < 2; ++i) {
        const double z = std::exp(lg[i][0]) + std::exp(lg[i][1]);
        const double p[2] = {std::exp(lg[i][0]) / z, std::exp(lg[i][1]) / z};
        const double r = p[mb.actions[i]] / std::exp(mb.old_log_probs[i]);
        const double adv = mb.advantages[i];
        const double rc = std::min(std::max(r, 0.8), 1.2);
        surr += -std::min(r * adv, rc * adv) / 2.0;
        vmse += (val[i] - mb.returns[i]) * (val[i] - mb.returns[i]) / 2.0;
        ent += -(p[0] * std::log(p[0]) + p[1] * std::log(p[1])) / 2.0;
    }
    EXPECT_NEAR(t.surrogate.item(), surr, 1e-12);
    EXPECT_NEAR(t.value_mse.item(), vmse, 1e-12);
    EXPECT_NEAR(t.entropy.item(), ent, 1e-12);
    EXPECT_NEAR(t.total.item(), surr + 0.5 * vmse - 0.01 * ent, 1e-12);
}

TEST(PpoLoss, ClippedRegionHasNoSurrogateGradient) {
    // Ratio 2 with positive advantage sits above 1 + clip.
    Tensor logits = Tensor::from({1, 2}, {0.0, 0.0}, true);
    ppo::Minibatch mb;
    mb.actions = {0};
    mb.old_log_probs = {std::log(0.25)};
    mb.advantages = {1.0};
    mb.returns = {0.0};
    ppo::TrainConfig cfg;
    Graph g;
    const auto t = ppo::ppo_loss_from_heads(g, logits, Tensor::zeros({1, 1}), mb, cfg);
    EXPECT_DOUBLE_EQ(t.surrogate.item(), -1.2);
    g.backward(t.surrogate);
    EXPECT_EQ(logits.grad()[0], 0.0);
    EXPECT_EQ(logits.grad()[1], 0.0);
}

TEST(PpoLoss, GradientCheck) {
    std::mt19937_64 rng(31);
    const policy::PolicyBundle bundle(policy::NetworkShape{4, 8, 6, 2}, rng);
    const auto mb = random_minibatch(6, 4, 2, 32);
    ppo::TrainConfig cfg;
    auto loss = [&](Graph& g) { return ppo::ppo_loss(g, mb, bundle, cfg).total; };
    EXPECT_LE(ad::finite_difference_check(loss, bundle.parameters()).max_relative_error, 1e-4);
}

TEST(TotalLoss, ZeroWeightsReduceToPpoExactly) {
    std::mt19937_64 rng(41);
    const auto model = policy::Model::create(policy::NetworkShape{4, 8, 6, 2}, 4, rng);
    const auto mb = random_minibatch(8, 4, 2, 42);
    ppo::TrainConfig cfg;
    cfg.lambda_vq_enc = 0.0;
    cfg.lambda_class = 0.0;
    Graph g1;
    const double total = ppo::total_loss(g1, mb, model, cfg).item();
    Graph g2;
    const double plain = ppo::ppo_loss(g2, mb, model.net, cfg).total.item();
    EXPECT_EQ(total, plain);
}

TEST(TotalLoss, ComponentsAddUp) {
    std::mt19937_64 rng(43);
    const auto model = policy::Model::create(policy::NetworkShape{4, 8, 6, 2}, 4, rng);
    const auto mb = random_minibatch(8, 4, 2, 44);
    ppo::TrainConfig cfg;
    cfg.lambda_vq_enc = 0.7;
    cfg.lambda_class = 0.3;
    ppo::LossBreakdown b;
    Graph g;
    const double total = ppo::total_loss(g, mb, model, cfg, &b).item();
    EXPECT_NEAR(total, b.rl + 0.7 * b.vq_enc + 0.3 * b.cls, 1e-12);
    EXPECT_EQ(b.assignments.size(), 8u);
    EXPECT_GE(b.d1, 0.0);
    EXPECT_GE(b.d2, 0.0);
}

TEST(TotalLoss, GradientCheck) {
    std::mt19937_64 rng(45);
    const auto model = policy::Model::create(policy::NetworkShape{4, 8, 6, 2}, 4, rng);
    const auto mb = random_minibatch(6, 4, 2, 46);
    ppo::TrainConfig cfg;
    auto loss = [&](Graph& g) { return ppo::total_loss(g, mb, model, cfg); };
    EXPECT_LE(ad::finite_difference_check(loss, model.parameters()).max_relative_error, 1e-4);
}

TEST(Config, ResolvedZeroesUnusedWeights) {
    ppo::TrainConfig c;
    c.variant = ppo::Variant::Ppo;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    const auto r = c.resolved();
    EXPECT_EQ(r.lambda_vq_enc, 0.0);
    EXPECT_EQ(r.lambda_class, 0.0);
    EXPECT_EQ(r.vq.lambda_reg, 0.0);
    EXPECT_NO_THROW(r.validate());
    c.variant = ppo::Variant::VqPpo;
    EXPECT_EQ(c.resolved().vq.lambda_reg, 0.0);
    EXPECT_EQ(c.resolved().lambda_class, 0.5);
}

TEST(Config, ValidateRejectsBadValues) {
    ppo::TrainConfig c;
    c.clip = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.minibatch = 5000;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.learning_rate = NAN;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_THROW(ppo::parse_variant("vqppo"), std::invalid_argument);
    EXPECT_EQ(ppo::variant_name(ppo::parse_variant("vq-ppo-reg")), "vq-ppo-reg");
}

TEST(Seeds, DeriveIsDeterministicAndDistinct) {
    EXPECT_EQ(ppo::derive_seed(1, 2), ppo::derive_seed(1, 2));
    EXPECT_NE(ppo::derive_seed(1, 2), ppo::derive_seed(1, 3));
    EXPECT_NE(ppo::derive_seed(1, 2), ppo::derive_seed(2, 2));
}

TEST(Rollout, BatchShapesAndReturns) {
    std::vector<env::EnvironmentPtr> envs;
    env::EnvConfig ec;
    for (std::uint64_t w = 0; w < 3; ++w) {
        envs.push_back(env::make_environment(ec, w, 100 + w));
    }
    ppo::RolloutCollector collector(std::move(envs));
    std::mt19937_64 rng(5);
    const policy::PolicyBundle bundle(policy::NetworkShape{4, 8, 6, 2}, rng);
    const auto batch = collector.collect(bundle, 50, 0.99, 0.95, rng);
    EXPECT_EQ(batch.size(), 150u);
    EXPECT_EQ(batch.observations.size(), 600u);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        EXPECT_NEAR(batch.returns[i], batch.advantages[i] + batch.old_values[i], 1e-12);
    }
    std::vector<std::size_t> idx = {0, 5, 7};
    const auto mb = ppo::make_minibatch(batch, idx);
    EXPECT_EQ(mb.observations.rows(), 3u);
    EXPECT_EQ(mb.actions[1], batch.actions[5]);
    EXPECT_EQ(mb.observations.at(2, 1), batch.observations[7 * 4 + 1]);
}

TEST(Train, DeterministicForSameConfig) {
    const auto cfg = tiny_config(ppo::Variant::VqPpoReg);
    const env::EnvConfig ec;
    const auto a = ppo::train(cfg, ec);
    const auto b = ppo::train(cfg, ec);
    ASSERT_EQ(a.log.size(), b.log.size());
    EXPECT_EQ(a.optimizer_steps, 2u * 4u * 4u);
    const auto pa = a.model.parameters();
    const auto pb = b.model.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::size_t j = 0; j < pa[i].size(); ++j) {
            ASSERT_EQ(pa[i].at(j), pb[i].at(j));
        }
    }
}

TEST(Train, ZeroAuxWeightsFollowPpoTrajectory) {
    auto ppo_cfg = tiny_config(ppo::Variant::Ppo);
    auto vq_cfg = tiny_config(ppo::Variant::VqPpoReg);
    vq_cfg.lambda_vq_enc = 0.0;
    vq_cfg.lambda_class = 0.0;
    const env::EnvConfig ec;
    const auto a = ppo::train(ppo_cfg, ec);
    const auto b = ppo::train(vq_cfg, ec);
    const auto na = a.model.net.parameters();
    const auto nb = b.model.net.parameters();
    ASSERT_EQ(na.size(), nb.size());
    for (std::size_t i = 0; i < na.size(); ++i) {
        for (std::size_t j = 0; j < na[i].size(); ++j) {
            ASSERT_EQ(na[i].at(j), nb[i].at(j));
        }
    }
}

TEST(TrainLog, CsvRoundTrip) {
    std::vector<ppo::TrainLogRow> rows(2);
    rows[0] = {256, 1, 0.5, 0.25, 0.1, 0.0, 0.693, 21.5, 3, 0.0};
    rows[1] = {512, 2, -0.125, 1.0 / 3.0, 0.2, 0.01, 0.5, 30.0, 4, 0.0};
    std::stringstream ss;
    ppo::write_train_log_csv(ss, rows);
    const auto back = ppo::read_train_log_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].timestep, 512);
    EXPECT_EQ(back[1].loss_vq_enc, 1.0 / 3.0);
    EXPECT_EQ(back[0].used_embeddings, 3u);
    EXPECT_EQ(back[0].mean_return, 21.5);
}
