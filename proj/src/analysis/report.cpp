#include "vqrl/analysis/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace vqrl::analysis {
namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

FeatureDump build_dump(const policy::Model& model, bool use_codebook, const std::vector<SampledState>& states,
                       std::vector<std::string> component_names) {
    if (states.empty()) {
        throw std::invalid_argument("build_dump: no states");
    }
    FeatureDump dump;
    dump.component_names = std::move(component_names);
    const std::size_t obs = states.front().observation.size();
    std::vector<double> flat;
    flat.reserve(states.size() * obs);
    for (const auto& s : states) {
        if (s.observation.size() != obs) {
            throw std::invalid_argument("build_dump: observations differ in size");
        }
        flat.insert(flat.end(), s.observation.begin(), s.observation.end());
    }

    ad::Graph g(ad::GradMode::Disabled);
    const ad::Tensor features = model.net.extract_features(g, ad::Tensor::from({states.size(), obs}, flat));
    const ad::Tensor logits = model.net.policy_logits(g, features);
    const std::size_t d = features.cols();
    const std::size_t actions = logits.cols();

    std::vector<int> embedding_action;
    if (use_codebook) {
        for (std::size_t k = 0; k < model.codebook.size(); ++k) {
            dump.embeddings.push_back(model.codebook.embedding(k));
            embedding_action.push_back(
                static_cast<int>(policy::predicted_cluster_action(model.net, dump.embeddings.back())));
        }
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
        DumpRow row;
        row.state = states[i].components;
        const auto f = features.values().subspan(i * d, d);
        row.feature.assign(f.begin(), f.end());
        row.action = static_cast<int>(policy::argmax(logits.values().subspan(i * actions, actions)));
        if (use_codebook) {
            const std::size_t k = vq::nearest_embedding(row.feature, model.codebook);
            row.cluster = static_cast<int>(k);
            row.classifier_action = embedding_action[k];
        }
        dump.rows.push_back(std::move(row));
    }
    return dump;
}

double tightness_ratio(const std::vector<std::vector<double>>& points, const std::vector<int>& assignment,
                       const std::vector<std::vector<double>>& centres) {
    if (points.empty() || points.size() != assignment.size()) {
        throw std::invalid_argument("tightness_ratio: points and assignment differ in length");
    }
    std::vector<bool> used(centres.size(), false);
    double within = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto k = static_cast<std::size_t>(assignment[i]);
        used.at(k) = true;
        within += distance(points[i], centres[k]);
    }
    within /= static_cast<double>(points.size());
    double min_inter = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < centres.size(); ++a) {
        for (std::size_t b = a + 1; b < centres.size(); ++b) {
            if (used[a] && used[b]) {
                min_inter = std::min(min_inter, distance(centres[a], centres[b]));
            }
        }
    }
    if (within == 0.0) {
        return 0.0;
    }
    if (!std::isfinite(min_inter) || min_inter == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return within / min_inter;
}

ClusterReport build_cluster_report(const FeatureDump& dump) {
    if (dump.rows.empty()) {
        throw std::invalid_argument("build_cluster_report: empty dump");
    }
    if (!dump.has_codebook()) {
        throw std::invalid_argument("build_cluster_report: dump has no cluster indices");
    }
    ClusterReport report;
    report.sample_size = dump.rows.size();
    const std::size_t k_total = dump.embeddings.size();
    report.counts.assign(k_total, 0);

    std::map<int, std::vector<std::size_t>> members;
    std::size_t agree = 0;
    double within = 0.0;
    for (std::size_t i = 0; i < dump.rows.size(); ++i) {
        const auto& r = dump.rows[i];
        members[r.cluster].push_back(i);
        ++report.counts.at(static_cast<std::size_t>(r.cluster));
        within += distance(r.feature, dump.embeddings[static_cast<std::size_t>(r.cluster)]);
        agree += r.classifier_action == r.action ? 1 : 0;
    }
    report.mean_within_distance = within / static_cast<double>(dump.rows.size());
    report.classifier_agreement = static_cast<double>(agree) / static_cast<double>(dump.rows.size());

    std::vector<std::vector<double>> points;
    std::vector<int> assignment;
    for (const auto& r : dump.rows) {
        points.push_back(r.feature);
        assignment.push_back(r.cluster);
    }
    report.tightness_ratio = tightness_ratio(points, assignment, dump.embeddings);

    report.min_inter_embedding_distance = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k_total; ++a) {
        report.used += report.counts[a] > 0 ? 1 : 0;
        for (std::size_t b = a + 1; b < k_total; ++b) {
            if (report.counts[a] > 0 && report.counts[b] > 0) {
                report.min_inter_embedding_distance =
                    std::min(report.min_inter_embedding_distance, distance(dump.embeddings[a], dump.embeddings[b]));
            }
        }
    }

    const std::size_t n_comp = dump.component_names.size();
    for (const auto& [cluster, idx] : members) {
        ClusterStats cs;
        cs.cluster = cluster;
        cs.count = idx.size();
        cs.components.resize(n_comp);
        for (std::size_t c = 0; c < n_comp; ++c) {
            auto& st = cs.components[c];
            st.min = std::numeric_limits<double>::infinity();
            st.max = -std::numeric_limits<double>::infinity();
            for (std::size_t i : idx) {
                const double v = dump.rows[i].state[c];
                st.min = std::min(st.min, v);
                st.max = std::max(st.max, v);
                st.mean += v;
            }
            st.mean /= static_cast<double>(idx.size());
            for (std::size_t i : idx) {
                const double v = dump.rows[i].state[c] - st.mean;
                st.std += v * v;
            }
            st.std = std::sqrt(st.std / static_cast<double>(idx.size()));
        }
        std::map<int, std::size_t> votes;
        for (std::size_t i : idx) {
            ++votes[dump.rows[i].action];
            cs.mean_distance += distance(dump.rows[i].feature, dump.embeddings[static_cast<std::size_t>(cluster)]);
        }
        cs.mean_distance /= static_cast<double>(idx.size());
        std::size_t best = 0;
        for (const auto& [action, count] : votes) {
            if (count > best) {
                best = count;
                cs.dominant_action = action;
            }
        }
        cs.dominant_fraction = static_cast<double>(best) / static_cast<double>(idx.size());
        report.clusters.push_back(std::move(cs));
    }
    return report;
}

std::vector<SubGroup> sub_classify(const FeatureDump& dump, std::size_t exemplars) {
    std::map<std::pair<int, int>, SubGroup> groups;
    for (std::size_t i = 0; i < dump.rows.size(); ++i) {
        const auto& r = dump.rows[i];
        auto& g = groups[{r.cluster, r.classifier_action}];
        g.cluster = r.cluster;
        g.classifier_action = r.classifier_action;
        ++g.size;
        if (g.exemplars.size() < exemplars) {
            g.exemplars.push_back(i);
        }
    }
    std::vector<SubGroup> out;
    for (auto& [key, g] : groups) {
        out.push_back(std::move(g));
    }
    return out;
}

KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
    if (points.empty() || k == 0) {
        throw std::invalid_argument("kmeans: need points and k >= 1");
    }
    k = std::min(k, points.size());
    std::mt19937_64 rng(seed);
    KMeansResult res;
    res.centres.push_back(points[std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng)]);
    std::vector<double> d2(points.size());
    while (res.centres.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : res.centres) {
                const double d = distance(points[i], c);
                best = std::min(best, d * d);
            }
            d2[i] = best;
            total += best;
        }
        if (total == 0.0) {
            break;
        }
        std::discrete_distribution<std::size_t> pick(d2.begin(), d2.end());
        res.centres.push_back(points[pick(rng)]);
    }

    res.assignment.assign(points.size(), -1);
    for (std::size_t it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            int best_k = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < res.centres.size(); ++c) {
                const double d = distance(points[i], res.centres[c]);
                if (d < best) {
                    best = d;
                    best_k = static_cast<int>(c);
                }
            }
            changed = changed || res.assignment[i] != best_k;
            res.assignment[i] = best_k;
        }
        if (!changed) {
            break;
        }
        const std::size_t dim = points.front().size();
        std::vector<std::vector<double>> sums(res.centres.size(), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(res.centres.size(), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(res.assignment[i]);
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) {
                sums[c][j] += points[i][j];
            }
        }
        for (std::size_t c = 0; c < res.centres.size(); ++c) {
            if (counts[c] == 0) {
                continue;
            }
            for (std::size_t j = 0; j < dim; ++j) {
                res.centres[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            }
        }
    }
    return res;
}

void write_scatter_csv(std::ostream& out, const FeatureDump& dump, const PCAModel& pca) {
    if (dump.rows.empty()) {
        throw std::invalid_argument("write_scatter_csv: empty dump");
    }
    const std::size_t d = dump.rows.front().feature.size();
    out << "kind,pc1,pc2,cluster,action,classifier_action";
    for (const auto& name : dump.component_names) {
        out << ',' << name;
    }
    for (std::size_t j = 0; j < d; ++j) {
        out << ",f" << j;
    }
    out << '\n';
    std::vector<bool> used(dump.embeddings.size(), false);
    for (const auto& r : dump.rows) {
        const auto pc = pca.project(r.feature);
        out << "state," << num(pc[0]) << ',' << num(pc[1]) << ',' << r.cluster << ',' << r.action << ','
            << r.classifier_action;
        for (double v : r.state) {
            out << ',' << num(v);
        }
        for (double v : r.feature) {
            out << ',' << num(v);
        }
        out << '\n';
        if (r.cluster >= 0) {
            used[static_cast<std::size_t>(r.cluster)] = true;
        }
    }
    for (std::size_t k = 0; k < dump.embeddings.size(); ++k) {
        if (!used[k]) {
            continue;
        }
        const auto pc = pca.project(dump.embeddings[k]);
        int action = -1;
        for (const auto& r : dump.rows) {
            if (r.cluster == static_cast<int>(k)) {
                action = r.classifier_action;
                break;
            }
        }
        out << "embedding," << num(pc[0]) << ',' << num(pc[1]) << ',' << k << ',' << action << ',' << action;
        for (std::size_t c = 0; c < dump.component_names.size(); ++c) {
            out << ',';
        }
        for (double v : dump.embeddings[k]) {
            out << ',' << num(v);
        }
        out << '\n';
    }
}

ScatterData read_scatter_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("scatter csv: empty input");
    }
    const auto header = split(line);
    const std::vector<std::string> fixed = {"kind", "pc1", "pc2", "cluster", "action", "classifier_action"};
    if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
        throw std::runtime_error("scatter csv: unexpected header '" + line + "'");
    }
    std::size_t first_feature = header.size();
    for (std::size_t i = fixed.size(); i < header.size(); ++i) {
        if (header[i] == "f0") {
            first_feature = i;
            break;
        }
    }
    ScatterData data;
    data.dump.component_names.assign(header.begin() + static_cast<std::ptrdiff_t>(fixed.size()),
                                     header.begin() + static_cast<std::ptrdiff_t>(first_feature));
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("scatter csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(header.size()));
        }
        std::vector<double> feature;
        for (std::size_t i = first_feature; i < cells.size(); ++i) {
            feature.push_back(std::stod(cells[i]));
        }
        const std::array<double, 2> pc{std::stod(cells[1]), std::stod(cells[2])};
        if (cells[0] == "state") {
            DumpRow r;
            r.cluster = std::stoi(cells[3]);
            r.action = std::stoi(cells[4]);
            r.classifier_action = std::stoi(cells[5]);
            for (std::size_t i = fixed.size(); i < first_feature; ++i) {
                r.state.push_back(std::stod(cells[i]));
            }
            r.feature = std::move(feature);
            data.dump.rows.push_back(std::move(r));
            data.state_pcs.push_back(pc);
        } else if (cells[0] == "embedding") {
            data.embedding_ids.push_back(std::stoi(cells[3]));
            data.dump.embeddings.push_back(std::move(feature));
            data.embedding_pcs.push_back(pc);
        } else {
            throw std::runtime_error("scatter csv: unknown row kind '" + cells[0] + "'");
        }
    }
    return data;
}

void write_clusters_csv(std::ostream& out, const ClusterReport& report, const std::vector<std::string>& names) {
    out << "cluster,count,dominant_action,dominant_fraction,mean_distance";
    for (const auto& n : names) {
        out << ',' << n << "_min," << n << "_max," << n << "_mean," << n << "_std";
    }
    out << '\n';
    for (const auto& c : report.clusters) {
        out << c.cluster << ',' << c.count << ',' << c.dominant_action << ',' << num(c.dominant_fraction) << ','
            << num(c.mean_distance);
        for (const auto& s : c.components) {
            out << ',' << num(s.min) << ',' << num(s.max) << ',' << num(s.mean) << ',' << num(s.std);
        }
        out << '\n';
    }
}

nlohmann::json report_to_json(const ClusterReport& report, const PCAModel& pca, const std::vector<SubGroup>& groups,
                               const FeatureDump& dump) {
    nlohmann::json j;
    j["sample_size"] = dump.rows.size();
    j["has_codebook"] = dump.has_codebook();
    j["state_components"] = dump.component_names;
    j["pca"] = {{"mean", pca.mean},
                {"axes", {pca.axes[0], pca.axes[1]}},
                {"explained_variance", {pca.explained[0], pca.explained[1]}}};
    if (dump.has_codebook()) {
        j["used_embeddings"] = report.used;
        j["counts"] = report.counts;
        j["mean_within_distance"] = report.mean_within_distance;
        j["min_inter_embedding_distance"] = finite_or_null(report.min_inter_embedding_distance);
        j["tightness_ratio"] = finite_or_null(report.tightness_ratio);
        j["classifier_agreement"] = report.classifier_agreement;
        nlohmann::json clusters = nlohmann::json::array();
        for (const auto& c : report.clusters) {
            nlohmann::json comps = nlohmann::json::object();
            for (std::size_t i = 0; i < c.components.size(); ++i) {
                const auto& s = c.components[i];
                comps[dump.component_names[i]] = {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.std}};
            }
            clusters.push_back({{"cluster", c.cluster},
                                {"count", c.count},
                                {"dominant_action", c.dominant_action},
                                {"dominant_fraction", c.dominant_fraction},
                                {"mean_distance", c.mean_distance},
                                {"components", comps}});
        }
        j["clusters"] = clusters;
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& g : groups) {
            subs.push_back({{"cluster", g.cluster},
                            {"classifier_action", g.classifier_action},
                            {"size", g.size},
                            {"exemplars", g.exemplars}});
        }
        j["sub_groups"] = subs;
    }
    return j;
}

AnalysisOutputs run_analysis(const policy::Model& model, bool use_codebook, env::Domain domain,
                             const std::vector<SampledState>& states, std::uint64_t seed,
                             const std::filesystem::path& out_dir) {
    AnalysisOutputs out;
    out.dump = build_dump(model, use_codebook, states, component_names(domain));

    std::vector<std::vector<double>> pca_rows;
    std::vector<std::vector<double>> features;
    for (const auto& r : out.dump.rows) {
        features.push_back(r.feature);
    }
    pca_rows = features;
    for (const auto& e : out.dump.embeddings) {
        pca_rows.push_back(e);
    }
    out.pca = fit_pca(pca_rows);

    const std::size_t k = model.codebook.size();
    const auto km = kmeans(features, k, seed);
    out.kmeans_tightness = tightness_ratio(features, km.assignment, km.centres);

    if (out.dump.has_codebook()) {
        out.report = build_cluster_report(out.dump);
        out.groups = sub_classify(out.dump);
    } else {
        out.report.sample_size = out.dump.rows.size();
    }
    out.json = report_to_json(out.report, out.pca, out.groups, out.dump);
    out.json["kmeans_tightness_ratio"] = finite_or_null(out.kmeans_tightness);
    out.json["seed"] = seed;

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream scatter(out_dir / "scatter.csv");
        write_scatter_csv(scatter, out.dump, out.pca);
        std::ofstream clusters(out_dir / "clusters.csv");
        write_clusters_csv(clusters, out.report, out.dump.component_names);
        std::ofstream report(out_dir / "report.json");
        report << out.json.dump(2) << '\n';
    }
    return out;
}

}  // namespace vqrl::analysis
