#include "mixdag/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace mixdag {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t to_count(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    if (pos != v.size() || x < 0) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(x);
}

double to_real(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_count(k, v); }},
        {"threads", [](RunConfig& c, const std::string& k, const std::string& v) { c.threads = to_count(k, v); }},
        {"data", [](RunConfig& c, const std::string&, const std::string& v) { c.data = v; }},
        {"specs", [](RunConfig& c, const std::string&, const std::string& v) { c.specs = v; }},
        {"blocks", [](RunConfig& c, const std::string&, const std::string& v) { c.blocks = v; }},
        {"out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }},
        {"strategy",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.strategy = parse_strategy(v);
             } catch (const std::exception& e) {
                 throw ConfigError(k + ": " + e.what());
             }
         }},
        {"learner",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.learner = parse_learner(v);
             } catch (const std::exception& e) {
                 throw ConfigError(k + ": " + e.what());
             }
         }},
        {"alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha = to_real(k, v); }},
        {"max_condition",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.max_condition = static_cast<int>(to_real(k, v));
         }},
        {"M", [](RunConfig& c, const std::string& k, const std::string& v) { c.M = to_count(k, v); }},
        {"T_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.T_max = to_count(k, v); }},
        {"burn_in", [](RunConfig& c, const std::string& k, const std::string& v) { c.burn_in = to_count(k, v); }},
        {"draws", [](RunConfig& c, const std::string& k, const std::string& v) { c.draws = to_count(k, v); }},
        {"ridge", [](RunConfig& c, const std::string& k, const std::string& v) { c.ridge = to_real(k, v); }},
        {"bootstrap", [](RunConfig& c, const std::string& k, const std::string& v) { c.bootstrap = to_count(k, v); }},
        {"bootstrap_fraction",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.bootstrap_fraction = to_real(k, v); }},
        {"folds", [](RunConfig& c, const std::string& k, const std::string& v) { c.folds = to_count(k, v); }},
        {"n", [](RunConfig& c, const std::string& k, const std::string& v) { c.n = to_count(k, v); }},
        {"p", [](RunConfig& c, const std::string& k, const std::string& v) { c.p = to_count(k, v); }},
        {"edges", [](RunConfig& c, const std::string& k, const std::string& v) { c.edges = to_count(k, v); }},
        {"discretize_prob",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.discretize_prob = to_real(k, v); }},
        {"thresholds",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.thresholds.clear();
             std::stringstream ss(v);
             std::string cell;
             while (std::getline(ss, cell, ',')) c.thresholds.push_back(to_real(k, trim(cell)));
         }},
        {"min_block", [](RunConfig& c, const std::string& k, const std::string& v) { c.min_block = to_count(k, v); }},
        {"max_block", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_block = to_count(k, v); }},
        {"background",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.background = to_count(k, v); }},
        {"dag", [](RunConfig& c, const std::string&, const std::string& v) { c.dag = v; }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        entries[key] = trim(line.substr(eq + 1));
    }
    return entries;
}

void apply_config(RunConfig& config, const std::map<std::string, std::string>& entries) {
    for (const auto& [key, value] : entries) {
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(config, key, value);
    }
}

void RunConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (threads == 0) throw ConfigError("threads must be positive");
    if (M == 0 || T_max == 0 || draws == 0 || folds == 0) throw ConfigError("M, T_max, draws and folds must be positive");
    if (!(ridge > 0.0)) throw ConfigError("ridge must be positive");
    if (!(bootstrap_fraction > 0.0 && bootstrap_fraction <= 1.0))
        throw ConfigError("bootstrap_fraction must lie in (0, 1]");
    if (!(discretize_prob >= 0.0 && discretize_prob <= 1.0)) throw ConfigError("discretize_prob must lie in [0, 1]");
    if (n == 0 || p == 0) throw ConfigError("n and p must be positive");
    if (min_block == 0 || min_block > max_block) throw ConfigError("need 0 < min_block <= max_block");
    if (!std::is_sorted(thresholds.begin(), thresholds.end()) ||
        std::adjacent_find(thresholds.begin(), thresholds.end()) != thresholds.end())
        throw ConfigError("thresholds must be strictly increasing");
}

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig c;
    c.strategy = strategy;
    c.learn.learner = learner;
    c.learn.alpha = alpha;
    c.learn.max_condition = max_condition;
    c.alg2.iterations = T_max;
    c.alg2.burn_in = burn_in;
    c.alg2.draws = draws;
    c.alg2.ridge = ridge;
    c.alg2.seed = seed;
    c.M = M;
    return c;
}

SimulationConfig RunConfig::simulation() const {
    SimulationConfig c;
    c.n = n;
    c.p = p;
    c.edges = edges;
    c.discretize_prob = discretize_prob;
    c.thresholds = thresholds;
    c.min_block = min_block;
    c.max_block = max_block;
    c.background = background;
    c.seed = seed;
    return c;
}

}  // namespace mixdag
