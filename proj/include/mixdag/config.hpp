#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixdag/evaluate.hpp"
#include "mixdag/pipeline.hpp"
#include "mixdag/simulate.hpp"

namespace mixdag {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    std::string data;
    std::string specs;
    std::string blocks;
    std::string out = "out";

    Strategy strategy = Strategy::consensus;
    LearnerKind learner = LearnerKind::hybrid;
    double alpha = 0.01;
    int max_condition = -1;
    std::size_t M = 10;
    std::size_t T_max = 15;
    std::size_t burn_in = 100;
    std::size_t draws = 200;
    double ridge = 0.1;
    std::size_t bootstrap = 0;
    double bootstrap_fraction = 0.5;
    std::size_t folds = 10;

    // simulation
    std::size_t n = 100;
    std::size_t p = 100;
    std::size_t edges = 200;
    double discretize_prob = 0.5;
    std::vector<double> thresholds{-1.0, 1.0};
    std::size_t min_block = 10;
    std::size_t max_block = 15;
    std::size_t background = 0;
    std::string dag;  // optional benchmark edge list

    void validate() const;
    PipelineConfig pipeline() const;
    SimulationConfig simulation() const;
};

/// Keys accepted in config files and as `--key value` flags.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Applies entries onto `config`; unknown keys and malformed values throw ConfigError.
void apply_config(RunConfig& config, const std::map<std::string, std::string>& entries);

}  // namespace mixdag
