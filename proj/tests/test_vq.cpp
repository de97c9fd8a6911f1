#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "vqrl/autodiff/adam.hpp"
#include "vqrl/autodiff/gradcheck.hpp"
#include "vqrl/vq/codebook.hpp"

using namespace vqrl;
using ad::Graph;
using ad::Tensor;

namespace {

vq::Codebook book(std::size_t k, std::size_t d, std::vector<double> v) {
    return vq::Codebook(Tensor::from({k, d}, std::move(v)));
}

std::size_t brute_argmin(const std::vector<double>& f, const vq::Codebook& cb) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cb.size(); ++k) {
        const auto e = cb.embedding(k);
        double d = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            d += (f[j] - e[j]) * (f[j] - e[j]);
        }
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

}  // namespace

TEST(Quantize, NearestByInspection) {
    const auto cb = book(2, 2, {0, 0, 2, 0});
    double dist = 0.0;
    EXPECT_EQ(vq::nearest_embedding(std::vector<double>{0.9, 0.0}, cb, &dist), 0u);
    EXPECT_DOUBLE_EQ(dist, 0.9);
}

TEST(Quantize, TieGoesToLowestIndex) {
    const auto cb = book(2, 2, {0, 0, 2, 0});
    EXPECT_EQ(vq::nearest_embedding(std::vector<double>{1.0, 0.0}, cb), 0u);
    const auto dup = book(3, 1, {0.5, 0.2, 0.2});
    EXPECT_EQ(vq::nearest_embedding(std::vector<double>{0.2}, dup), 1u);
}

TEST(Quantize, MatchesExhaustiveScan) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    vq::Codebook cb(8, 16, rng);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> f(16);
        for (double& x : f) {
            x = n(rng);
        }
        EXPECT_EQ(vq::nearest_embedding(f, cb), brute_argmin(f, cb));
    }
}

TEST(Quantize, BatchForwardValueIsEmbeddingExactly) {
    std::mt19937_64 rng(9);
    vq::Codebook cb(4, 3, rng);
    Tensor f = Tensor::from({2, 3}, {0.1, -0.2, 0.3, 0.9, 0.4, -0.7}, true);
    Graph g;
    const auto q = vq::quantize(g, f, cb);
    ASSERT_EQ(q.indices.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto e = cb.embedding(q.indices[i]);
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_EQ(q.quantized.at(i, j), e[j]);
        }
    }
}

TEST(Quantize, StraightThroughIdentity) {
    std::mt19937_64 rng(13);
    vq::Codebook cb(4, 3, rng);
    Tensor f1 = Tensor::from({1, 3}, {0.2, 0.1, -0.4}, true);
    const Tensor w = Tensor::from({1, 3}, {1.5, -2.0, 0.25});
    {
        Graph g;
        const auto q = vq::quantize(g, f1, cb);
        g.backward(g.sum(g.mul(g.square(q.quantized), w)));
    }
    {
        // Same loss fed the embedding directly: its slope there is what the
        // feature must receive.
        const auto e = cb.embedding(vq::nearest_embedding(f1.values(), cb));
        Tensor at_e = Tensor::from({1, 3}, e, true);
        Graph g;
        g.backward(g.sum(g.mul(g.square(at_e), w)));
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_DOUBLE_EQ(f1.grad()[j], at_e.grad()[j]);
        }
    }
    for (double v : cb.embeddings().grad()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Quantize, Errors) {
    std::mt19937_64 rng(1);
    vq::Codebook cb(3, 4, rng);
    EXPECT_THROW(vq::nearest_embedding(std::vector<double>{1.0, 2.0}, cb), ad::ShapeError);
    Graph g;
    EXPECT_THROW(vq::quantize(g, Tensor::zeros({2, 3}), cb), ad::ShapeError);
    EXPECT_THROW(vq::Codebook(0, 4, rng), std::invalid_argument);
}

TEST(VqLoss, HandValue) {
    auto cb = book(1, 2, {0, 0});
    Tensor f = Tensor::from({1, 2}, {1, 0}, true);
    Graph g;
    const auto q = vq::quantize(g, f, cb);
    EXPECT_DOUBLE_EQ(vq::vq_encoding_loss(g, f, q, {0.25, 5.0, 0.0}, cb).item(), 1.25);
}

TEST(VqLoss, CoincidentIsZero) {
    auto cb = book(2, 2, {0.3, -0.1, 0.9, 0.9});
    Tensor f = Tensor::from({1, 2}, {0.3, -0.1}, true);
    Graph g;
    const auto q = vq::quantize(g, f, cb);
    EXPECT_EQ(vq::vq_encoding_loss(g, f, q, {0.25, 5.0, 0.0}, cb).item(), 0.0);
}

TEST(VqLoss, StopGradientPlacement) {
    // beta = 0 leaves only ||sg[f] - e||^2: nothing reaches the feature.
    auto cb = book(1, 2, {0.0, 0.0});
    cb.embeddings().set_requires_grad(true);
    Tensor f = Tensor::from({1, 2}, {1.0, -2.0}, true);
    {
        Graph g;
        const auto q = vq::quantize(g, f, cb);
        g.backward(vq::vq_encoding_loss(g, f, q, {0.0, 5.0, 0.0}, cb));
    }
    EXPECT_EQ(f.grad()[0], 0.0);
    EXPECT_EQ(f.grad()[1], 0.0);
    EXPECT_DOUBLE_EQ(cb.embeddings().grad()[0], -2.0);
    EXPECT_DOUBLE_EQ(cb.embeddings().grad()[1], 4.0);

    // The commitment term alone moves only the feature.
    auto cb2 = book(1, 2, {0.0, 0.0});
    Tensor f2 = Tensor::from({1, 2}, {1.0, -2.0}, true);
    Graph g;
    const auto q = vq::quantize(g, f2, cb2);
    const Tensor commit = g.row_sum(g.square(g.sub(g.stop_gradient(q.selected), f2)));
    g.backward(g.mean(commit));
    EXPECT_EQ(cb2.embeddings().grad()[0], 0.0);
    EXPECT_DOUBLE_EQ(f2.grad()[0], 2.0);
}

TEST(Regularizers, HandValues) {
    Graph g;
    EXPECT_NEAR(vq::reg_repulsion(g, book(2, 2, {0, 0, 1, 0}), 5.0).item(), std::exp(-5.0), 1e-12);
    EXPECT_DOUBLE_EQ(vq::reg_repulsion(g, book(2, 2, {0.4, 0.4, 0.4, 0.4}), 5.0).item(), 1.0);
    EXPECT_EQ(vq::reg_box(g, book(2, 2, {0.5, -0.9, 1.0, 0.3})).item(), 0.0);
    EXPECT_NEAR(vq::reg_box(g, book(1, 2, {1.2, 0.3})).item(), 0.44, 1e-12);
    const vq::VQHyper h{0.25, 5.0, 0.1};
    EXPECT_NEAR(vq::reg_total(g, book(2, 2, {0, 0, 1, 0}), h).item(), std::exp(-5.0), 1e-12);
}

TEST(Regularizers, RepulsionMatchesPairEnumeration) {
    std::mt19937_64 rng(21);
    vq::Codebook cb(4, 5, rng);
    double expected = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            const auto a = cb.embedding(i);
            const auto b = cb.embedding(j);
            double d = 0.0;
            for (std::size_t c = 0; c < 5; ++c) {
                d += (a[c] - b[c]) * (a[c] - b[c]);
            }
            expected += std::exp(-3.0 * std::sqrt(d));
        }
    }
    Graph g;
    EXPECT_NEAR(vq::reg_repulsion(g, cb, 3.0).item(), expected, 1e-14);
}

TEST(Regularizers, SingleEmbeddingRepulsionIsZero) {
    Graph g;
    EXPECT_EQ(vq::reg_repulsion(g, book(1, 2, {0.1, 0.2}), 5.0).item(), 0.0);
}

TEST(Regularizers, RepulsionDecreasesWithSeparation) {
    Graph g;
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {0.0, 0.1, 0.5, 1.0, 2.0}) {
        const double v = vq::reg_repulsion(g, book(3, 2, {0, 0, d, 0, 5, 5}), 5.0).item();
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(Regularizers, BoxZeroIffInsideBall) {
    Graph g;
    EXPECT_EQ(vq::reg_box(g, book(2, 2, {1.0, -1.0, 0.0, 0.5})).item(), 0.0);
    EXPECT_GT(vq::reg_box(g, book(2, 2, {1.0, -1.0, 0.0, 1.0001})).item(), 0.0);
}

TEST(Regularizers, BoxSubgradientToFirstMaximalCoordinate) {
    auto cb = book(2, 2, {0.2, 1.5, -1.5, 0.3});
    Graph g;
    g.backward(vq::reg_box(g, cb));
    const auto gr = cb.embeddings().grad();
    EXPECT_DOUBLE_EQ(gr[1], 3.0);
    EXPECT_EQ(gr[0], 0.0);
    EXPECT_EQ(gr[2], 0.0);
    EXPECT_EQ(gr[3], 0.0);
}

TEST(VqLoss, GradientCheck) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.6);
    vq::Codebook cb(2, 2, rng);
    std::vector<double> fv(6);
    for (double& x : fv) {
        x = n(rng);
    }
    // Push one embedding outside the unit ball so the box term is active.
    cb.embeddings().values()[0] = 1.4;
    Tensor f = Tensor::from({3, 2}, fv, true);
    auto loss = [&](Graph& g) {
        const auto q = vq::quantize(g, f, cb);
        return vq::vq_encoding_loss(g, f, q, {0.25, 5.0, 0.1}, cb);
    };
    EXPECT_LE(ad::finite_difference_check(loss, {f, cb.embeddings()}).max_relative_error, 1e-4);
}

TEST(Utilization, Counting) {
    const std::vector<std::size_t> a = {0, 0, 1};
    const auto u = vq::utilization(a, 8);
    EXPECT_EQ(u.counts[0], 2u);
    EXPECT_EQ(u.counts[1], 1u);
    EXPECT_EQ(u.used, 2u);
    const auto empty = vq::utilization(std::vector<std::size_t>{}, 8);
    EXPECT_EQ(empty.used, 0u);
    EXPECT_THROW(vq::utilization(std::vector<std::size_t>{8}, 8), std::out_of_range);
}

TEST(Codebook, InitInsideHalfBoxAndJsonRoundTrip) {
    std::mt19937_64 rng(2);
    vq::Codebook cb(8, 16, rng);
    for (double v : cb.embeddings().values()) {
        EXPECT_LE(std::abs(v), 0.5);
    }
    std::mt19937_64 other(99);
    vq::Codebook copy(8, 16, other);
    copy.load_json(cb.to_json());
    for (std::size_t i = 0; i < cb.embeddings().size(); ++i) {
        EXPECT_EQ(copy.embeddings().at(i), cb.embeddings().at(i));
    }
}
