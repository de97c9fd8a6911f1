#include "vqrl/harness/results.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace vqrl::harness {
namespace {

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

/// CSV cell: conditions such as "(3, 0.3, 1.5)" contain commas.
std::string quote(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + '"';
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

int digits_for(const std::string& domain) { return domain.find("cartpole") != std::string::npos ? 1 : 3; }

}  // namespace

double ResultRow::mean() const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& u : returns) {
        for (double r : u) {
            s += r;
            ++n;
        }
    }
    return n == 0 ? 0.0 : s / static_cast<double>(n);
}

double ResultRow::std() const {
    const double m = mean();
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& u : returns) {
        for (double r : u) {
            s += (r - m) * (r - m);
            ++n;
        }
    }
    return n == 0 ? 0.0 : std::sqrt(s / static_cast<double>(n));
}

std::size_t ResultRow::n_episodes() const {
    std::size_t n = 0;
    for (const auto& u : returns) {
        n += u.size();
    }
    return n;
}

std::vector<double> ResultRow::unit_means() const {
    std::vector<double> out;
    for (const auto& u : returns) {
        double s = 0.0;
        for (double r : u) {
            s += r;
        }
        out.push_back(u.empty() ? 0.0 : s / static_cast<double>(u.size()));
    }
    return out;
}

void ResultTable::write_csv(std::ostream& out) const {
    out << "condition,mean,std,n_episodes";
    for (const auto& u : units) {
        out << ",mean_" << u;
    }
    out << ",note\n";
    for (const auto& r : rows) {
        out << quote(r.condition) << ',' << num(r.mean()) << ',' << num(r.std()) << ',' << r.n_episodes();
        for (double m : r.unit_means()) {
            out << ',' << num(m);
        }
        out << ',' << quote(r.note) << '\n';
    }
}

void ResultTable::write_raw_csv(std::ostream& out) const {
    out << "condition,unit,episode,return\n";
    for (const auto& r : rows) {
        for (std::size_t u = 0; u < r.returns.size(); ++u) {
            for (std::size_t e = 0; e < r.returns[u].size(); ++e) {
                out << quote(r.condition) << ',' << u << ',' << e << ',' << num(r.returns[u][e]) << '\n';
            }
        }
    }
}

void ResultTable::write_text(std::ostream& out) const {
    const int digits = digits_for(domain);
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header = {condition_name, variant + " (mean +- std)", "episodes"};
    for (const auto& u : units) {
        header.push_back(u);
    }
    header.push_back("note");
    cells.push_back(header);
    for (const auto& r : rows) {
        std::vector<std::string> line = {r.condition, fixed(r.mean(), digits) + " +- " + fixed(r.std(), digits),
                                         std::to_string(r.n_episodes())};
        for (double m : r.unit_means()) {
            line.push_back(fixed(m, digits));
        }
        line.push_back(r.note);
        cells.push_back(line);
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            width[i] = std::max(width[i], line[i].size());
        }
    }
    out << kind << " / " << domain << '\n';
    for (const auto& line : cells) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(width[i] + 2)) << line[i];
        }
        out << '\n';
    }
}

nlohmann::json ResultTable::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        rows_json.push_back({{"condition", r.condition},
                             {"note", r.note},
                             {"mean", r.mean()},
                             {"std", r.std()},
                             {"n_episodes", r.n_episodes()},
                             {"unit_means", r.unit_means()},
                             {"returns", r.returns}});
    }
    return {{"kind", kind},
            {"condition_name", condition_name},
            {"domain", domain},
            {"variant", variant},
            {"units", units},
            {"rows", rows_json}};
}

ResultTable ResultTable::from_json(const nlohmann::json& doc) {
    ResultTable t;
    t.kind = doc.at("kind").get<std::string>();
    t.condition_name = doc.at("condition_name").get<std::string>();
    t.domain = doc.at("domain").get<std::string>();
    t.variant = doc.at("variant").get<std::string>();
    t.units = doc.at("units").get<std::vector<std::string>>();
    for (const auto& r : doc.at("rows")) {
        ResultRow row;
        row.condition = r.at("condition").get<std::string>();
        row.note = r.value("note", "");
        row.returns = r.at("returns").get<std::vector<std::vector<double>>>();
        t.rows.push_back(std::move(row));
    }
    return t;
}

void ResultTable::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "table.csv");
    write_csv(csv);
    std::ofstream raw(dir / "raw.csv");
    write_raw_csv(raw);
    std::ofstream txt(dir / "table.txt");
    write_text(txt);
    std::ofstream js(dir / "table.json");
    js << to_json().dump(2) << '\n';
}

ResultTable ResultTable::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "table.json");
    if (!in) {
        throw std::invalid_argument("no table.json in '" + dir.string() + "'");
    }
    return from_json(nlohmann::json::parse(in));
}

std::vector<ResultRow> rows_from_raw_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "condition,unit,episode,return") {
        throw std::runtime_error("raw csv: unexpected header");
    }
    std::vector<ResultRow> rows;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cells = parse_csv_line(line);
        if (cells.size() != 4) {
            throw std::runtime_error("raw csv: expected 4 cells in '" + line + "'");
        }
        auto [it, inserted] = index.try_emplace(cells[0], rows.size());
        if (inserted) {
            rows.push_back(ResultRow{cells[0], "", {}});
        }
        auto& row = rows[it->second];
        const auto unit = static_cast<std::size_t>(std::stoul(cells[1]));
        const auto episode = static_cast<std::size_t>(std::stoul(cells[2]));
        if (row.returns.size() <= unit) {
            row.returns.resize(unit + 1);
        }
        if (row.returns[unit].size() != episode) {
            throw std::runtime_error("raw csv: episodes out of order for '" + cells[0] + "'");
        }
        row.returns[unit].push_back(std::stod(cells[3]));
    }
    return rows;
}

std::string percent_delta(double value, double base) {
    if (base == 0.0) {
        return value == 0.0 ? "+0.0%" : "n/a";
    }
    const double pct = 100.0 * (value - base) / std::abs(base);
    std::ostringstream s;
    s << (pct >= 0.0 ? "+" : "") << std::fixed << std::setprecision(1) << pct << '%';
    return s.str();
}

std::string compare_markdown(const std::vector<ResultTable>& tables) {
    if (tables.empty()) {
        throw std::invalid_argument("compare: no tables");
    }
    const auto& first = tables.front();
    for (const auto& t : tables) {
        if (t.kind != first.kind || t.domain != first.domain || t.rows.size() != first.rows.size()) {
            throw std::invalid_argument("compare: tables differ in kind, domain or number of conditions");
        }
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (t.rows[i].condition != first.rows[i].condition) {
                throw std::invalid_argument("compare: condition '" + t.rows[i].condition + "' does not match '" +
                                            first.rows[i].condition + "'");
            }
        }
    }
    const ResultTable* base = nullptr;
    for (const auto& t : tables) {
        if (t.variant == "ppo") {
            base = &t;
        }
    }
    const int digits = digits_for(first.domain);
    std::ostringstream md;
    md << "| " << first.condition_name << " |";
    for (const auto& t : tables) {
        md << ' ' << t.variant << " |";
    }
    md << "\n|---|";
    for (std::size_t i = 0; i < tables.size(); ++i) {
        md << "---|";
    }
    md << '\n';
    for (std::size_t r = 0; r < first.rows.size(); ++r) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& t : tables) {
            best = std::max(best, t.rows[r].mean());
        }
        md << "| " << first.rows[r].condition << " |";
        for (const auto& t : tables) {
            const auto& row = t.rows[r];
            std::string cell = fixed(row.mean(), digits) + " ± " + fixed(row.std(), digits);
            if (row.mean() == best) {
                cell = "**" + cell + "**";
            }
            if (base != nullptr && &t != base) {
                cell += " (" + percent_delta(row.mean(), base->rows[r].mean()) + ")";
            }
            md << ' ' << cell << " |";
        }
        md << '\n';
    }
    return md.str();
}

}  // namespace vqrl::harness
