#pragma once

#include <string>
#include <vector>

#include "mixdag/config.hpp"

namespace mixdag {

/// Synthetic dataset plus truth artifacts in config.out:
/// data.csv, specs.tsv, blocks.tsv, truth_dag.tsv, truth_cpdag.tsv,
/// truth_cov.txt and background.csv when background > 0.
std::vector<std::string> cmd_simulate(const RunConfig& config);

/// Pipeline on config.data/specs/blocks; writes cpdag.tsv, preestimate.tsv,
/// sigma.txt (unless skipped), timing.tsv, warnings.txt and, with bootstrap > 0,
/// confidence.tsv. Returns the written file names.
std::vector<std::string> cmd_pipeline(const RunConfig& config);

}  // namespace mixdag
