#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/graphs.hpp"
#include "mixdag/normal.hpp"
#include "mixdag/parallel.hpp"
#include "mixdag/pipeline.hpp"
#include "mixdag/rng.hpp"

namespace mixdag {

class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct F1Score {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
};

/// Undirected edges count as both directed edges in both graphs.
F1Score cpdag_f1(const Cpdag& truth, const Cpdag& est);

/// RMSE over the non-zero off-diagonal entries of truth.
double cov_rmse(const BlockCovariance& est, const BlockCovariance& truth);

double threshold_rmse(const std::vector<std::vector<double>>& est, const std::vector<std::vector<double>>& truth);

struct CorrelationSummary {
    std::vector<double> values;
    double mean = 0.0;
    std::vector<double> bin_left;  // 40 bins of width 0.05 over [-1, 1]
    std::vector<std::size_t> counts;
};

/// Correlation, across columns, of the rows of every within-block unit pair.
CorrelationSummary correlation_summary(const Matrix& columns, const std::vector<std::vector<std::size_t>>& blocks);

struct LoglikEstimate {
    double value = 0.0;           // log-likelihood divided by the number of test units
    double standard_error = 0.0;  // of value
    double total = 0.0;
};

struct TestLoglikOptions {
    int replications = 500;
    std::uint64_t seed = 1;
};

/// log P(a < W <= b) for W ~ N(0, sigma) by sequential conditioning (GHK).
double ghk_log_probability(const SymMatrix& sigma, const std::vector<Interval>& box, int replications, Rng& rng,
                           double* standard_error = nullptr);

/// Log-likelihood of x_test under the SEM with unit covariance cov_test, per test unit.
LoglikEstimate test_loglik(const MixedDataset& x_test, const DagModel& model, const BlockCovariance& cov_test,
                           const TestLoglikOptions& options = {});

/// Blocks split into folds greedily, largest block first into the currently
/// smallest fold.
std::vector<std::vector<std::size_t>> assign_folds(const std::vector<std::vector<std::size_t>>& blocks,
                                                   std::size_t folds);

struct CvConfig {
    std::size_t folds = 10;
    std::vector<Strategy> strategies{Strategy::baseline, Strategy::consensus_ident, Strategy::consensus};
    PipelineConfig pipeline;
    TestLoglikOptions loglik;
};

struct CvFold {
    std::size_t test_units = 0;
    std::vector<double> loglik;  // per strategy
    std::vector<double> standard_error;
};

struct CvResult {
    std::vector<Strategy> strategies;
    std::vector<CvFold> folds;
    std::vector<double> medians;
};

/// Training sees only training-block rows; Sigma_test is estimated from the
/// background rows of the test units only (identity when background is empty).
CvResult blocked_cv(const MixedDataset& x, const Matrix& background, const CvConfig& config,
                    ThreadPool& pool = serial_pool());

/// Conf(a -> b) for every ordered pair.
class EdgeConfidence {
public:
    EdgeConfidence() = default;
    explicit EdgeConfidence(std::size_t p) : p_(p), conf_(p * p, 0.0) {}
    std::size_t size() const { return p_; }
    double directed(std::size_t a, std::size_t b) const { return conf_[a * p_ + b]; }
    double undirected(std::size_t a, std::size_t b) const { return directed(a, b) + directed(b, a); }
    double& at(std::size_t a, std::size_t b) { return conf_[a * p_ + b]; }

private:
    std::size_t p_ = 0;
    std::vector<double> conf_;
};

/// Mean over replicates of I(a -> b): 1 if directed, 1/2 if undirected, else 0.
EdgeConfidence edge_confidence(const std::vector<Cpdag>& replicates);

/// Edges of `full` kept when their confidence reaches 0.5; undirected edges
/// are oriented when one orientation has at least 3 times the other's confidence.
Cpdag confident_graph(const Cpdag& full, const EdgeConfidence& conf);

struct BootstrapConfig {
    std::size_t replicates = 50;
    double fraction = 0.5;
    std::uint64_t seed = 1;
    PipelineConfig pipeline;
};

struct BootstrapResult {
    Cpdag full;
    EdgeConfidence confidence;
    Cpdag final_graph;
    std::size_t effective = 0;
    std::size_t failed = 0;
};

/// Units resampled with replacement; each resampled unit keeps its block, so
/// duplicates share a block.
BootstrapResult bootstrap_confidence(const MixedDataset& x, const BootstrapConfig& config,
                                     ThreadPool& pool = serial_pool(), const Cpdag* full = nullptr);

}  // namespace mixdag
