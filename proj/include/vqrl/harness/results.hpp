#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vqrl::harness {

/// One evaluation condition. `returns[u]` holds the per-episode returns of
/// evaluation unit u (a checkpoint/seed pair); every other field is derived
/// from them.
struct ResultRow {
    std::string condition;
    std::string note;
    std::vector<std::vector<double>> returns;

    double mean() const;  ///< pooled over every episode of every unit
    double std() const;   ///< population std of the pooled episodes
    std::size_t n_episodes() const;
    std::vector<double> unit_means() const;
};

struct ResultTable {
    std::string kind;           ///< "robust" or "gen"
    std::string condition_name; ///< "delta", "p_a", "params", "goal"
    std::string domain;
    std::string variant;
    std::vector<std::string> units;  ///< label of each evaluation unit
    std::vector<ResultRow> rows;

    void write_csv(std::ostream& out) const;
    /// condition,unit,episode,return
    void write_raw_csv(std::ostream& out) const;
    void write_text(std::ostream& out) const;
    nlohmann::json to_json() const;
    static ResultTable from_json(const nlohmann::json& doc);

    /// table.csv, table.txt, raw.csv and table.json under `dir`.
    void save(const std::filesystem::path& dir) const;
    static ResultTable load(const std::filesystem::path& dir);
};

/// Rebuilds the rows of a table from its raw per-episode CSV.
std::vector<ResultRow> rows_from_raw_csv(std::istream& in);

/// Side-by-side markdown of tables that share one condition list, with
/// percent deltas against the "ppo" table when present and the best mean of
/// each row in bold. Throws std::invalid_argument on mismatched conditions.
std::string compare_markdown(const std::vector<ResultTable>& tables);

/// "+12.3%" style delta of `value` relative to `base`.
std::string percent_delta(double value, double base);

}  // namespace vqrl::harness
