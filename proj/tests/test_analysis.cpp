#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "vqrl/analysis/pca.hpp"
#include "vqrl/analysis/report.hpp"
#include "vqrl/analysis/sampling.hpp"

using namespace vqrl;
using namespace vqrl::analysis;

namespace {

using Rows = std::vector<std::vector<double>>;

// Leading eigenpairs by power iteration with deflation.
std::vector<std::pair<double, std::vector<double>>> power_pca(const Rows& rows, int count) {
    const std::size_t n = rows.size(), d = rows[0].size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) {
            mean[j] += r[j] / static_cast<double>(n);
        }
    }
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& r : rows) {
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) {
                cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / static_cast<double>(n - 1);
            }
        }
    }
    std::vector<std::pair<double, std::vector<double>>> out;
    for (int c = 0; c < count; ++c) {
        std::vector<double> v(d, 1.0);
        v[0] = 2.0;
        double lambda = 0.0;
        for (int it = 0; it < 5000; ++it) {
            std::vector<double> w(d, 0.0);
            for (std::size_t a = 0; a < d; ++a) {
                for (std::size_t b = 0; b < d; ++b) {
                    w[a] += cov[a][b] * v[b];
                }
            }
            double norm = 0.0;
            for (double x : w) {
                norm += x * x;
            }
            norm = std::sqrt(norm);
            lambda = norm;
            for (std::size_t a = 0; a < d; ++a) {
                v[a] = w[a] / norm;
            }
        }
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) {
                cov[a][b] -= lambda * v[a] * v[b];
            }
        }
        out.push_back({lambda, v});
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

FeatureDump synthetic_dump() {
    FeatureDump dump;
    dump.component_names = {"a"};
    dump.embeddings = {{0.0, 0.0}, {4.0, 0.0}, {9.0, 9.0}};
    // Cluster 0 at distance 1, cluster 1 at distance 0.5; embedding 2 unused.
    const std::vector<std::tuple<std::vector<double>, int, int, int>> rows = {
        {{1.0, 0.0}, 0, 0, 0}, {{0.0, -1.0}, 0, 0, 1}, {{4.0, 0.5}, 1, 1, 1}, {{3.5, 0.0}, 1, 0, 1}};
    for (const auto& [f, k, act, cls] : rows) {
        DumpRow r;
        r.state = {static_cast<double>(k)};
        r.feature = f;
        r.cluster = k;
        r.action = act;
        r.classifier_action = cls;
        dump.rows.push_back(r);
    }
    return dump;
}

}  // namespace

TEST(Sampling, CartPoleInsideBoundsAndDeterministic) {
    env::EnvConfig c;
    const auto a = sample_states(c, 500, 3);
    const auto b = sample_states(c, 500, 3);
    ASSERT_EQ(a.size(), 500u);
    const StateBounds bounds;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].observation, b[i].observation);
        EXPECT_LE(std::abs(a[i].components[0]), bounds.x);
        EXPECT_LE(std::abs(a[i].components[1]), bounds.x_dot);
        EXPECT_LE(std::abs(a[i].components[2]), bounds.theta);
        EXPECT_LE(std::abs(a[i].components[3]), bounds.theta_dot);
    }
    EXPECT_NE(sample_states(c, 5, 4)[0].observation, a[0].observation);
}

TEST(Sampling, GenCartPoleRepeatsState) {
    env::EnvConfig c;
    c.domain = env::Domain::GenCartPole;
    const auto s = sample_states(c, 10, 1);
    for (const auto& st : s) {
        ASSERT_EQ(st.observation.size(), 16u);
        for (int f = 1; f < 4; ++f) {
            for (int k = 0; k < 4; ++k) {
                EXPECT_EQ(st.observation[f * 4 + k], st.observation[k]);
            }
        }
    }
}

TEST(Sampling, MiniGridLegalStates) {
    env::EnvConfig c;
    c.domain = env::Domain::MiniGrid;
    const auto s = sample_states(c, 1000, 2);
    EXPECT_EQ(component_names(env::Domain::MiniGrid).size(), 5u);
    for (const auto& st : s) {
        const env::GridPos agent{static_cast<int>(st.components[0]), static_cast<int>(st.components[1])};
        const env::GridPos goal{static_cast<int>(st.components[3]), static_cast<int>(st.components[4])};
        EXPECT_TRUE(env::is_interior(agent));
        EXPECT_FALSE(agent == goal);
        EXPECT_EQ(st.observation.size(), 147u);
        for (double v : st.observation) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Pca, DesignedCovariance) {
    // Points a u + b v with a in {-3, 3}, b in {-1, 1}: eigenvalues 12 and 4/3.
    const std::vector<double> u = {0.5, 0.5, 0.5, 0.5};
    const std::vector<double> v = {0.5, -0.5, 0.5, -0.5};
    Rows rows;
    for (double a : {-3.0, 3.0}) {
        for (double b : {-1.0, 1.0}) {
            std::vector<double> r(4);
            for (int j = 0; j < 4; ++j) {
                r[j] = 7.0 + a * u[j] + b * v[j];
            }
            rows.push_back(r);
        }
    }
    const auto pca = fit_pca(rows);
    EXPECT_NEAR(pca.explained[0], 12.0, 1e-10);
    EXPECT_NEAR(pca.explained[1], 4.0 / 3.0, 1e-10);
    EXPECT_NEAR(std::abs(dot(pca.axes[0], u)), 1.0, 1e-10);
    EXPECT_NEAR(std::abs(dot(pca.axes[1], v)), 1.0, 1e-10);
    for (double m : pca.mean) {
        EXPECT_NEAR(m, 7.0, 1e-12);
    }
    const auto p = pca.project(rows[0]);
    EXPECT_NEAR(std::abs(p[0]), 3.0, 1e-10);
    EXPECT_NEAR(std::abs(p[1]), 1.0, 1e-10);
}

TEST(Pca, MatchesPowerIteration) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    Rows rows(300, std::vector<double>(6));
    const double scale[6] = {3.0, 2.0, 1.0, 0.5, 0.3, 0.1};
    for (auto& r : rows) {
        for (int j = 0; j < 6; ++j) {
            r[j] = scale[j] * g(rng);
        }
        // Mix coordinates so the axes are not aligned with the basis.
        const double a = r[0], b = r[1];
        r[0] = 0.8 * a + 0.6 * b;
        r[1] = -0.6 * a + 0.8 * b;
    }
    const auto pca = fit_pca(rows);
    const auto ref = power_pca(rows, 2);
    for (int c = 0; c < 2; ++c) {
        EXPECT_NEAR(pca.explained[static_cast<std::size_t>(c)], ref[static_cast<std::size_t>(c)].first, 1e-8);
        EXPECT_NEAR(std::abs(dot(pca.axes[static_cast<std::size_t>(c)], ref[static_cast<std::size_t>(c)].second)),
                    1.0, 1e-8);
    }
    EXPECT_NEAR(dot(pca.axes[0], pca.axes[1]), 0.0, 1e-12);
}

TEST(Pca, SignConvention) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    Rows rows(50, std::vector<double>(3));
    for (auto& r : rows) {
        for (double& x : r) {
            x = g(rng);
        }
    }
    const auto pca = fit_pca(rows);
    for (const auto& axis : pca.axes) {
        std::size_t big = 0;
        for (std::size_t j = 1; j < axis.size(); ++j) {
            if (std::abs(axis[j]) > std::abs(axis[big])) {
                big = j;
            }
        }
        EXPECT_GT(axis[big], 0.0);
    }
}

TEST(Pca, IsotropicGaussianHasEvenSpectrum) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g;
    Rows rows(20000, std::vector<double>(4));
    for (auto& r : rows) {
        for (double& x : r) {
            x = g(rng);
        }
    }
    const auto pca = fit_pca(rows);
    EXPECT_LT(pca.explained[0] / pca.explained[1], 1.1);
}

TEST(Pca, ProjectionsAreUncorrelated) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    Rows rows(400, std::vector<double>(5));
    for (auto& r : rows) {
        const double z = g(rng);
        for (int j = 0; j < 5; ++j) {
            r[j] = z * (j + 1) + g(rng);
        }
    }
    const auto pca = fit_pca(rows);
    double s01 = 0.0;
    for (const auto& r : rows) {
        const auto p = pca.project(r);
        s01 += p[0] * p[1];
    }
    EXPECT_NEAR(s01 / 399.0, 0.0, 1e-9);
}

TEST(Pca, Errors) {
    EXPECT_THROW(fit_pca(Rows{{1.0, 2.0}, {3.0, 4.0}}), std::invalid_argument);
    EXPECT_THROW(fit_pca(Rows{{1.0}, {2.0}, {3.0}}), std::invalid_argument);
    EXPECT_THROW(fit_pca(Rows{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}}), std::invalid_argument);
}

TEST(Tightness, HandExamples) {
    const Rows centres = {{0.0, 0.0}, {4.0, 0.0}};
    const Rows points = {{1.0, 0.0}, {4.0, 1.0}};
    EXPECT_DOUBLE_EQ(tightness_ratio(points, {0, 1}, centres), 0.25);
    EXPECT_EQ(tightness_ratio(centres, {0, 1}, centres), 0.0);
    EXPECT_TRUE(std::isinf(tightness_ratio(points, {0, 0}, centres)));
    EXPECT_THROW(tightness_ratio(points, {0}, centres), std::invalid_argument);
}

TEST(Tightness, UnusedCentresDoNotCount) {
    const Rows centres = {{0.0, 0.0}, {4.0, 0.0}, {0.1, 0.0}};
    const Rows points = {{1.0, 0.0}, {4.0, 1.0}};
    EXPECT_DOUBLE_EQ(tightness_ratio(points, {0, 1}, centres), 0.25);
}

TEST(Report, CountsAndStatistics) {
    const auto dump = synthetic_dump();
    const auto r = build_cluster_report(dump);
    EXPECT_EQ(r.sample_size, 4u);
    EXPECT_EQ(r.counts, (std::vector<std::size_t>{2, 2, 0}));
    EXPECT_EQ(r.used, 2u);
    EXPECT_DOUBLE_EQ(r.mean_within_distance, 0.75);
    EXPECT_DOUBLE_EQ(r.min_inter_embedding_distance, 4.0);
    EXPECT_DOUBLE_EQ(r.tightness_ratio, 0.1875);
    EXPECT_DOUBLE_EQ(r.classifier_agreement, 0.5);
    ASSERT_EQ(r.clusters.size(), 2u);
    EXPECT_EQ(r.clusters[0].dominant_action, 0);
    EXPECT_DOUBLE_EQ(r.clusters[0].dominant_fraction, 1.0);
    EXPECT_DOUBLE_EQ(r.clusters[1].dominant_fraction, 0.5);
    EXPECT_DOUBLE_EQ(r.clusters[1].components[0].mean, 1.0);
}

TEST(Report, SubGroupsPartitionTheDump) {
    const auto groups = sub_classify(synthetic_dump());
    std::size_t total = 0;
    for (const auto& g : groups) {
        total += g.size;
        EXPECT_LE(g.exemplars.size(), 3u);
    }
    EXPECT_EQ(total, 4u);
    EXPECT_EQ(groups.size(), 3u);
}

TEST(Report, KMeansRecoversSeparatedBlobs) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 0.1);
    Rows pts;
    const Rows centres = {{0, 0}, {5, 0}, {0, 5}};
    for (int i = 0; i < 300; ++i) {
        const auto& c = centres[static_cast<std::size_t>(i % 3)];
        pts.push_back({c[0] + g(rng), c[1] + g(rng)});
    }
    const auto km = kmeans(pts, 3, 1);
    for (int i = 3; i < 300; ++i) {
        EXPECT_EQ(km.assignment[static_cast<std::size_t>(i)], km.assignment[static_cast<std::size_t>(i % 3)]);
    }
    EXPECT_LT(tightness_ratio(pts, km.assignment, km.centres), 0.05);
    const auto again = kmeans(pts, 3, 1);
    EXPECT_EQ(again.assignment, km.assignment);
}

TEST(Report, ScatterCsvRoundTrip) {
    const auto dump = synthetic_dump();
    Rows all;
    for (const auto& r : dump.rows) {
        all.push_back(r.feature);
    }
    const auto pca = fit_pca(all);
    std::stringstream ss;
    write_scatter_csv(ss, dump, pca);
    const auto back = read_scatter_csv(ss);
    ASSERT_EQ(back.dump.rows.size(), 4u);
    EXPECT_EQ(back.embedding_ids, (std::vector<int>{0, 1}));
    EXPECT_EQ(back.dump.component_names, dump.component_names);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(back.dump.rows[i].feature, dump.rows[i].feature);
        EXPECT_EQ(back.dump.rows[i].cluster, dump.rows[i].cluster);
        EXPECT_EQ(back.dump.rows[i].classifier_action, dump.rows[i].classifier_action);
        const auto pc = pca.project(dump.rows[i].feature);
        EXPECT_EQ(back.state_pcs[i][0], pc[0]);
        EXPECT_EQ(back.state_pcs[i][1], pc[1]);
    }
    std::stringstream bad("kind,pc1\nstate,1\n");
    EXPECT_THROW(read_scatter_csv(bad), std::runtime_error);
}

TEST(Report, PlainPpoUsesSentinels) {
    std::mt19937_64 rng(13);
    const auto model = policy::Model::create(policy::NetworkShape{4, 8, 16, 2}, 8, rng);
    env::EnvConfig c;
    const auto states = sample_states(c, 50, 1);
    const auto dump = build_dump(model, false, states, component_names(env::Domain::CartPole));
    EXPECT_FALSE(dump.has_codebook());
    for (const auto& r : dump.rows) {
        EXPECT_EQ(r.cluster, -1);
        EXPECT_EQ(r.classifier_action, -1);
        EXPECT_EQ(r.feature.size(), 16u);
    }
}

TEST(Report, RunAnalysisWritesFiles) {
    std::mt19937_64 rng(14);
    const auto model = policy::Model::create(policy::NetworkShape{4, 8, 16, 2}, 8, rng);
    env::EnvConfig c;
    const auto states = sample_states(c, 200, 2);
    const auto dir = std::filesystem::temp_directory_path() / "vqrl_test_analysis";
    std::filesystem::remove_all(dir);
    const auto out = run_analysis(model, true, env::Domain::CartPole, states, 5, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "scatter.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "clusters.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
    std::ifstream in(dir / "report.json");
    const auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["sample_size"], 200);
    EXPECT_EQ(j["used_embeddings"], out.report.used);
    std::size_t sum = 0;
    for (const auto& g : out.groups) {
        sum += g.size;
    }
    EXPECT_EQ(sum, 200u);
    std::filesystem::remove_all(dir);
}
