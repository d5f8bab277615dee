#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mixdag/covest.hpp"
#include "mixdag/decorrelate.hpp"
#include "mixdag/learn.hpp"
#include "mixdag/preestimate.hpp"

namespace mixdag {

enum class Strategy { baseline, average, consensus, consensus_ident };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

struct PipelineConfig {
    Strategy strategy = Strategy::consensus;
    LearnOptions learn;
    Algorithm1Options alg1;
    Algorithm2Config alg2;
    std::size_t M = 10;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct PipelineResult {
    Cpdag graph;
    ParentSets initial_parents;
    PreEstimate pre;
    BlockCovariance cov;  // empty for the baseline strategy
    CovEstimateReport cov_report;
    Algorithm2Result latent;
    std::vector<std::string> warnings;
    std::vector<StageTiming> timings;
};

/// Error raised by a pipeline stage, tagged with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause)
        : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// baseline_parents -> algorithm1 -> covariance (estimated, or identity for
/// consensus-ident) -> algorithm2 -> strategy. The baseline strategy stops
/// after its learner.
PipelineResult run_pipeline(const MixedDataset& x, const std::vector<std::vector<std::size_t>>& blocks,
                            const PipelineConfig& config, ThreadPool& pool = serial_pool());

/// Parameters of the model on a DAG extension of `graph`: thresholds and
/// discrete coefficients from algorithm1; continuous coefficients by least
/// squares, generalized by the de-correlating factor of `cov` when given.
DagModel fit_model(const MixedDataset& x, const Cpdag& graph, const BlockCovariance* cov,
                   ThreadPool& pool = serial_pool());

}  // namespace mixdag
