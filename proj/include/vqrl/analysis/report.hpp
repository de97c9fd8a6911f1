#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vqrl/analysis/pca.hpp"
#include "vqrl/analysis/sampling.hpp"
#include "vqrl/policy/model.hpp"

namespace vqrl::analysis {

struct DumpRow {
    std::vector<double> state;
    std::vector<double> feature;
    int cluster = -1;            ///< codebook row, -1 when no codebook is used
    int action = 0;              ///< policy argmax
    int classifier_action = -1;  ///< argmax of C(e_k), -1 without codebook
};

struct FeatureDump {
    std::vector<std::string> component_names;
    std::vector<DumpRow> rows;
    /// K x D codebook (empty for plain PPO).
    std::vector<std::vector<double>> embeddings;

    bool has_codebook() const { return !embeddings.empty(); }
};

/// Features, quantization and both argmax actions for every state.
FeatureDump build_dump(const policy::Model& model, bool use_codebook, const std::vector<SampledState>& states,
                       std::vector<std::string> component_names);

struct ComponentStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

struct ClusterStats {
    int cluster = 0;
    std::size_t count = 0;
    std::vector<ComponentStats> components;
    int dominant_action = 0;
    double dominant_fraction = 0.0;
    double mean_distance = 0.0;  ///< mean ||feature - e_k||
};

struct ClusterReport {
    std::size_t sample_size = 0;
    std::vector<std::size_t> counts;  ///< per codebook row
    std::size_t used = 0;
    double mean_within_distance = 0.0;
    /// Infinite when fewer than two embeddings are used.
    double min_inter_embedding_distance = 0.0;
    /// mean_within_distance / min_inter_embedding_distance; 0 when the
    /// features sit exactly on their embeddings, infinite when it is
    /// otherwise undefined.
    double tightness_ratio = 0.0;
    /// Fraction of rows where the classifier action equals the policy action.
    double classifier_agreement = 0.0;
    std::vector<ClusterStats> clusters;  ///< populated clusters only
};

/// Cluster statistics of a dump that carries cluster indices.
ClusterReport build_cluster_report(const FeatureDump& dump);

/// Tightness of an arbitrary assignment of points to centres.
double tightness_ratio(const std::vector<std::vector<double>>& points, const std::vector<int>& assignment,
                       const std::vector<std::vector<double>>& centres);

struct SubGroup {
    int cluster = 0;
    int classifier_action = 0;
    std::size_t size = 0;
    std::vector<std::size_t> exemplars;  ///< first few row indices
};

/// Groups rows by (cluster, classifier action); sizes sum to the dump size.
std::vector<SubGroup> sub_classify(const FeatureDump& dump, std::size_t exemplars = 3);

struct KMeansResult {
    std::vector<std::vector<double>> centres;
    std::vector<int> assignment;
};

/// k-means++ seeding followed by Lloyd iterations until assignments settle.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 100);

/// Scatter rows: one per state (kind "state") and one per used embedding
/// (kind "embedding", cluster = codebook row, action = classifier argmax).
void write_scatter_csv(std::ostream& out, const FeatureDump& dump, const PCAModel& pca);

struct ScatterData {
    FeatureDump dump;                 ///< embeddings holds only the used rows
    std::vector<int> embedding_ids;   ///< codebook row of each embedding line
    std::vector<std::array<double, 2>> state_pcs;
    std::vector<std::array<double, 2>> embedding_pcs;
};
ScatterData read_scatter_csv(std::istream& in);

void write_clusters_csv(std::ostream& out, const ClusterReport& report, const std::vector<std::string>& names);

nlohmann::json report_to_json(const ClusterReport& report, const PCAModel& pca, const std::vector<SubGroup>& groups,
                               const FeatureDump& dump);

struct AnalysisOutputs {
    FeatureDump dump;
    PCAModel pca;
    ClusterReport report;
    std::vector<SubGroup> groups;
    /// Tightness of a k-means pseudo-codebook fitted to the same features.
    double kmeans_tightness = 0.0;
    nlohmann::json json;
};

/// Full pipeline: dump, PCA (features plus embeddings for VQ models), cluster
/// report and sub-groups. Writes scatter.csv, clusters.csv and report.json
/// into `out_dir` when it is non-empty.
AnalysisOutputs run_analysis(const policy::Model& model, bool use_codebook, env::Domain domain,
                             const std::vector<SampledState>& states, std::uint64_t seed,
                             const std::filesystem::path& out_dir = {});

}  // namespace vqrl::analysis
