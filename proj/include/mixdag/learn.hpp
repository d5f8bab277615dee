#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/graphs.hpp"
#include "mixdag/linalg.hpp"
#include "mixdag/parallel.hpp"

namespace mixdag {

enum class LearnerKind { pc, hc, hybrid };

LearnerKind parse_learner(const std::string& name);
std::string to_string(LearnerKind kind);

struct LearnOptions {
    LearnerKind learner = LearnerKind::hybrid;
    double alpha = 0.01;
    /// Largest conditioning set in PC; negative means 3 when p >= 100 and
    /// unbounded otherwise.
    int max_condition = -1;
};

/// Correlation matrix plus memoized Fisher-z p-values.
class CiTestCache {
public:
    /// Sample correlation of the columns of `data`; n_effective = rows.
    explicit CiTestCache(const Matrix& data);
    CiTestCache(SymMatrix correlation, double n_effective);

    std::size_t p() const { return static_cast<std::size_t>(corr_.dim()); }
    double n_effective() const { return n_; }
    const SymMatrix& correlation() const { return corr_; }

    /// Partial correlation of i and j given S; NaN when the conditioning
    /// submatrix is singular.
    double partial_correlation(std::size_t i, std::size_t j, std::span<const std::size_t> S) const;
    double p_value(std::size_t i, std::size_t j, std::span<const std::size_t> S);
    std::size_t singular_count() const { return singular_.load(); }

private:
    SymMatrix corr_;
    double n_;
    std::mutex mu_;
    std::map<std::vector<std::size_t>, double> memo_;
    std::atomic<std::size_t> singular_{0};
};

/// Fisher z-test of zero partial correlation; p = 1 on a singular conditioning set.
double fisher_z_test(std::size_t i, std::size_t j, std::span<const std::size_t> S, CiTestCache& cache);

struct Skeleton {
    Cpdag graph;  // undirected edges only
    /// sepset[i * p + j] for removed pairs
    std::vector<std::vector<std::size_t>> sepsets;
    std::vector<bool> separated;
};

/// Order-independent (stable) adjacency search. Among the conditioning sets of
/// the level at which a pair is separated, the one with the largest p-value
/// (first in lexicographic order on ties) is kept as the separating set.
Skeleton pc_skeleton(CiTestCache& cache, double alpha, int max_condition, ThreadPool& pool = serial_pool());

/// Orients unshielded colliders using the separating sets, then applies Meek
/// closure. Pairs that receive arrowheads from both sides stay undirected.
Cpdag orient_skeleton(const Skeleton& skeleton);

Cpdag pc_learn(CiTestCache& cache, double alpha, int max_condition, ThreadPool& pool = serial_pool());
Cpdag pc_learn(const Matrix& data, double alpha = 0.01, int max_condition = -1, ThreadPool& pool = serial_pool());

/// Gaussian BIC of a family (intercept and variance counted), from a covariance
/// matrix, without the constant -n/2 (log 2 pi + 1) every family shares.
class BicScore {
public:
    explicit BicScore(const Matrix& data);
    double family(std::size_t node, const std::vector<std::size_t>& parents) const;
    double total(const Dag& g) const;

private:
    Matrix cov_;
    double n_;
};

struct HillClimbTrace {
    std::vector<double> scores;  // after each accepted move, starting with the empty graph
};

/// Greedy add/delete/reverse search on Gaussian BIC from the empty graph.
/// When `restrict` is given only pairs adjacent in it may carry an edge.
Dag hc_learn(const Matrix& data, const Cpdag* restrict = nullptr, HillClimbTrace* trace = nullptr);

/// PC adjacency phase, restricted hill climbing, then the CPDAG of the result.
Cpdag hybrid_learn(const Matrix& data, double alpha = 0.01, int max_condition = -1, ThreadPool& pool = serial_pool());

int effective_max_condition(int requested, std::size_t p);

Cpdag run_learner(const Matrix& data, const LearnOptions& options, ThreadPool& pool = serial_pool());

/// Edge kept when adjacent in at least ceil(M/2) graphs; among those, directed
/// if one orientation carries at least 2/3 of the orientation mass (undirected
/// edges count 1/2 each way); Meek closure afterwards.
Cpdag combine_consensus(const std::vector<Cpdag>& graphs);

/// Learner on each of the last M matrices, then combine_consensus.
Cpdag consensus_estimate(const std::vector<Matrix>& z_tilde, std::size_t M, const LearnOptions& options,
                         ThreadPool& pool = serial_pool());

/// Learner once on the entrywise mean of the last M matrices.
Cpdag average_estimate(const std::vector<Matrix>& z_tilde, std::size_t M, const LearnOptions& options,
                       ThreadPool& pool = serial_pool());

/// Learner on the raw values with every column z-scored.
Cpdag baseline_estimate(const MixedDataset& x, const LearnOptions& options, ThreadPool& pool = serial_pool());

}  // namespace mixdag
