#include "vqrl/harness/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

namespace vqrl::harness {
namespace {

using nlohmann::json;

json number_or_inf(double v) { return std::isinf(v) && v > 0 ? json("inf") : json(v); }

json goals_to_json(const std::vector<env::GridPos>& goals) {
    json out = json::array();
    for (const auto& g : goals) {
        out.push_back({g.col, g.row});
    }
    return out;
}

std::vector<env::GridPos> goals_from_json(const json& j, const std::string& key) {
    std::vector<env::GridPos> out;
    for (const auto& cell : j) {
        if (!cell.is_array() || cell.size() != 2) {
            throw ConfigError(key + ": each goal must be a [col, row] pair");
        }
        out.push_back({cell[0].get<int>(), cell[1].get<int>()});
    }
    return out;
}

/// Rejects keys of `doc` that the default layout does not have.
void check_keys(const json& doc, const json& reference, const std::string& prefix) {
    if (!doc.is_object()) {
        throw ConfigError((prefix.empty() ? std::string("config") : prefix) + " must be an object");
    }
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!reference.contains(it.key())) {
            throw ConfigError("unknown config key '" + path + "'");
        }
        const json& ref = reference.at(it.key());
        if (ref.is_object()) {
            check_keys(it.value(), ref, path);
        }
    }
}

void merge(json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
            merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + path + "." + key + "': " + e.what());
    }
}

}  // namespace

std::size_t EvalSettings::resolved_episodes(env::Domain domain) const {
    if (episodes != 0) {
        return episodes;
    }
    return env::is_cartpole(domain) ? 20 : 50;
}

ppo::TrainConfig ExperimentConfig::train_config() const {
    ppo::TrainConfig c = train;
    c.seed = seed;
    return c;
}

double parse_number(const std::string& text) {
    std::string lower;
    for (char ch : text) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (lower == "inf" || lower == "+inf" || lower == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + text + "'");
    }
    if (used != text.size()) {
        throw ConfigError("not a number: '" + text + "'");
    }
    return v;
}

double json_number(const json& value, const std::string& key) {
    if (value.is_number()) {
        return value.get<double>();
    }
    if (value.is_string()) {
        const double v = parse_number(value.get<std::string>());
        if (!std::isinf(v)) {
            throw ConfigError(key + ": numbers must not be quoted (only \"inf\" is)");
        }
        return v;
    }
    throw ConfigError(key + ": expected a number or \"inf\"");
}

std::vector<double> default_noise_grid(env::Domain domain) {
    if (env::is_cartpole(domain)) {
        return {120, 110, 100, 90, 80, 70, 60, 50};
    }
    return {0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
}

json to_json(const ExperimentConfig& c) {
    const auto& t = c.train;
    json train = {{"variant", ppo::variant_name(t.variant)},
                  {"lambda_vq_enc", t.lambda_vq_enc},
                  {"lambda_class", t.lambda_class},
                  {"beta", t.vq.beta},
                  {"c_d", t.vq.repulsion},
                  {"lambda_reg", t.vq.lambda_reg},
                  {"codebook_size", t.codebook_size},
                  {"feature_size", t.feature_size},
                  {"hidden", t.hidden},
                  {"gamma", t.gamma},
                  {"gae_lambda", t.gae_lambda},
                  {"clip", t.clip},
                  {"epochs", t.epochs},
                  {"minibatch", t.minibatch},
                  {"workers", t.workers},
                  {"steps_per_worker", t.steps_per_worker},
                  {"total_timesteps", t.total_timesteps},
                  {"entropy_coef", t.entropy_coef},
                  {"value_coef", t.value_coef},
                  {"learning_rate", t.learning_rate},
                  {"max_grad_norm", t.max_grad_norm},
                  {"anneal_lr", t.anneal_lr},
                  {"eval_every", t.eval_every},
                  {"eval_episodes", t.eval_episodes},
                  {"checkpoint_every", t.checkpoint_every},
                  {"keep_best", t.keep_best},
                  {"stop_at_return", t.stop_at_return}};

    json params = json::array();
    for (const auto& p : c.env.params_set) {
        params.push_back({p[0], p[1], p[2]});
    }
    json envj = {
        {"name", env::domain_name(c.env.domain)},
        {"cartpole", {{"params_set", params}}},
        {"noise",
         {{"mode", env::noise_mode_name(c.env.noise.mode)},
          {"delta", number_or_inf(c.env.noise.delta)},
          {"p_a", c.env.noise.attack_prob}}},
        {"minigrid",
         {{"goal_split", c.env.goal_split},
          {"train_goals", goals_to_json(c.env.goals.train)},
          {"test_goals", goals_to_json(c.env.goals.test)},
          {"fixed_goal", c.env.fixed_goal ? json{c.env.fixed_goal->col, c.env.fixed_goal->row} : json(nullptr)}}}};

    json grid = json::array();
    for (double v : c.eval.noise_grid) {
        grid.push_back(number_or_inf(v));
    }
    json pgrid = json::array();
    for (const auto& p : c.eval.param_grid) {
        pgrid.push_back({p[0], p[1], p[2]});
    }
    json evalj = {{"episodes", c.eval.episodes},
                  {"seeds", c.eval.seeds},
                  {"noise_grid", grid},
                  {"param_grid", pgrid},
                  {"n_states", c.eval.n_states},
                  {"sample_mode", c.eval.sample_mode},
                  {"bounds",
                   {{"x", c.eval.bounds.x},
                    {"x_dot", c.eval.bounds.x_dot},
                    {"theta", c.eval.bounds.theta},
                    {"theta_dot", c.eval.bounds.theta_dot}}}};

    return {{"name", c.name}, {"seed", c.seed}, {"train", train}, {"env", envj}, {"eval", evalj}};
}

ExperimentConfig experiment_from_json(const json& doc) {
    const json reference = to_json(ExperimentConfig{});
    check_keys(doc, reference, "");
    json full = reference;
    merge(full, doc);

    ExperimentConfig c;
    c.name = get<std::string>(full, "name", "");
    c.seed = get<std::uint64_t>(full, "seed", "");
    if (c.name.empty() || c.name.find('/') != std::string::npos) {
        throw ConfigError("name must be non-empty and contain no '/'");
    }

    const json& t = full.at("train");
    auto& tc = c.train;
    try {
        tc.variant = ppo::parse_variant(get<std::string>(t, "variant", "train"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    tc.lambda_vq_enc = get<double>(t, "lambda_vq_enc", "train");
    tc.lambda_class = get<double>(t, "lambda_class", "train");
    tc.vq.beta = get<double>(t, "beta", "train");
    tc.vq.repulsion = get<double>(t, "c_d", "train");
    tc.vq.lambda_reg = get<double>(t, "lambda_reg", "train");
    tc.codebook_size = get<std::size_t>(t, "codebook_size", "train");
    tc.feature_size = get<std::size_t>(t, "feature_size", "train");
    tc.hidden = get<std::size_t>(t, "hidden", "train");
    tc.gamma = get<double>(t, "gamma", "train");
    tc.gae_lambda = get<double>(t, "gae_lambda", "train");
    tc.clip = get<double>(t, "clip", "train");
    tc.epochs = get<int>(t, "epochs", "train");
    tc.minibatch = get<std::size_t>(t, "minibatch", "train");
    tc.workers = get<std::size_t>(t, "workers", "train");
    tc.steps_per_worker = get<std::size_t>(t, "steps_per_worker", "train");
    tc.total_timesteps = get<std::int64_t>(t, "total_timesteps", "train");
    tc.entropy_coef = get<double>(t, "entropy_coef", "train");
    tc.value_coef = get<double>(t, "value_coef", "train");
    tc.learning_rate = get<double>(t, "learning_rate", "train");
    tc.max_grad_norm = get<double>(t, "max_grad_norm", "train");
    tc.anneal_lr = get<bool>(t, "anneal_lr", "train");
    tc.eval_every = get<std::size_t>(t, "eval_every", "train");
    tc.eval_episodes = get<std::size_t>(t, "eval_episodes", "train");
    tc.checkpoint_every = get<std::size_t>(t, "checkpoint_every", "train");
    tc.keep_best = get<bool>(t, "keep_best", "train");
    tc.stop_at_return = get<double>(t, "stop_at_return", "train");

    const json& e = full.at("env");
    try {
        c.env.domain = env::parse_domain(get<std::string>(e, "name", "env"));
        const json& noise = e.at("noise");
        c.env.noise.mode = env::parse_noise_mode(get<std::string>(noise, "mode", "env.noise"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    for (const auto& p : e.at("cartpole").at("params_set")) {
        if (!p.is_array() || p.size() != 3) {
            throw ConfigError("env.cartpole.params_set: each entry must be [m_c, m_p, l]");
        }
        c.env.params_set.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    const json& noise = e.at("noise");
    c.env.noise.delta = json_number(noise.at("delta"), "env.noise.delta");
    c.env.noise.attack_prob = get<double>(noise, "p_a", "env.noise");
    if (!(c.env.noise.delta > 0.0)) {
        throw ConfigError("env.noise.delta must be > 0");
    }
    if (c.env.noise.attack_prob < 0.0 || c.env.noise.attack_prob > 1.0) {
        throw ConfigError("env.noise.p_a must be in [0, 1]");
    }
    const json& mg = e.at("minigrid");
    c.env.goal_split = get<std::string>(mg, "goal_split", "env.minigrid");
    if (c.env.goal_split != "train" && c.env.goal_split != "test") {
        throw ConfigError("env.minigrid.goal_split must be 'train' or 'test'");
    }
    c.env.goals.train = goals_from_json(mg.at("train_goals"), "env.minigrid.train_goals");
    c.env.goals.test = goals_from_json(mg.at("test_goals"), "env.minigrid.test_goals");
    if (!mg.at("fixed_goal").is_null()) {
        const auto g = goals_from_json(json::array({mg.at("fixed_goal")}), "env.minigrid.fixed_goal");
        c.env.fixed_goal = g.front();
    }
    try {
        c.env.goals.validate();
        for (const auto& p : env::resolve_params(c.env)) {
            p.validate();
        }
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }

    const json& ev = full.at("eval");
    c.eval.episodes = get<std::size_t>(ev, "episodes", "eval");
    c.eval.seeds = get<std::vector<std::uint64_t>>(ev, "seeds", "eval");
    for (const auto& v : ev.at("noise_grid")) {
        c.eval.noise_grid.push_back(json_number(v, "eval.noise_grid"));
    }
    for (const auto& p : ev.at("param_grid")) {
        if (!p.is_array() || p.size() != 3) {
            throw ConfigError("eval.param_grid: each entry must be [m_c, m_p, l]");
        }
        c.eval.param_grid.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    c.eval.n_states = get<std::size_t>(ev, "n_states", "eval");
    c.eval.sample_mode = get<std::string>(ev, "sample_mode", "eval");
    if (c.eval.sample_mode != "uniform" && c.eval.sample_mode != "trajectory") {
        throw ConfigError("eval.sample_mode must be 'uniform' or 'trajectory'");
    }
    const json& b = ev.at("bounds");
    c.eval.bounds.x = get<double>(b, "x", "eval.bounds");
    c.eval.bounds.x_dot = get<double>(b, "x_dot", "eval.bounds");
    c.eval.bounds.theta = get<double>(b, "theta", "eval.bounds");
    c.eval.bounds.theta_dot = get<double>(b, "theta_dot", "eval.bounds");
    if (c.eval.seeds.empty()) {
        throw ConfigError("eval.seeds must not be empty");
    }

    // Variant weights are resolved here so the echoed config shows what runs.
    c.train = c.train.resolved();
    try {
        c.train_config().validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return c;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }

    const json reference = to_json(ExperimentConfig{});
    const json* ref = &reference;
    json* target = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!ref->is_object() || !ref->contains(part)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        ref = &ref->at(part);
        if (dot == std::string::npos) {
            (*target)[part] = value;
            return;
        }
        if (!target->contains(part) || !(*target)[part].is_object()) {
            (*target)[part] = json::object();
        }
        target = &(*target)[part];
        start = dot + 1;
    }
}

ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open config file '" + path.string() + "'");
        }
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + path.string() + "': " + e.what());
        }
    }
    for (const auto& o : overrides) {
        apply_override(doc, o);
    }
    return experiment_from_json(doc);
}

std::filesystem::path runs_root() {
    if (const char* root = std::getenv("VQRL_RUNS_DIR"); root != nullptr && *root != '\0') {
        return root;
    }
    return "runs";
}

std::filesystem::path run_directory(const ExperimentConfig& config) {
    return runs_root() / (config.name + "_s" + std::to_string(config.seed));
}

}  // namespace vqrl::harness
