#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/graphs.hpp"
#include "mixdag/rng.hpp"

namespace mixdag {

class InfeasibleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// DAG with exactly `edges` edges, all pointing forward in a random node order.
Dag random_dag(std::size_t p, std::size_t edges, Rng& rng);

/// Weights uniform on [-0.9, -0.6] U [0.6, 0.9] on every edge of g.
Matrix sample_weights(const Dag& g, Rng& rng);

/// Level c such that t[c-1] < z <= t[c] (with t[-1] = -inf, t[C-1] = +inf).
int quantize(double z, const std::vector<double>& thresholds);

enum class BlockPattern { equal, toeplitz };

/// Sigma_ij = theta for i != j.
SymMatrix equal_block(std::size_t size, double theta);
/// Sigma_ij = theta^(|i - j| / 5).
SymMatrix toeplitz_block(std::size_t size, double theta);

struct BlockDesign {
    BlockPattern pattern;
    double theta;
    std::size_t size;
};

struct BlockCovarianceDraw {
    BlockCovariance cov;
    std::vector<BlockDesign> designs;
};

/// Contiguous blocks with sizes drawn uniformly from [min_size, max_size]; the
/// last block takes whatever remains (possibly fewer than min_size units).
/// Each block is Equal (theta ~ U(0.4, 0.7)) or Toeplitz (theta ~ U(0.1, 0.25))
/// with probability 1/2.
BlockCovarianceDraw make_block_cov(std::size_t n, Rng& rng, std::size_t min_size = 10, std::size_t max_size = 15);

/// Each node is discrete with probability `discretize_prob`, with the given
/// thresholds; otherwise continuous. Names are X1..Xp.
std::vector<VariableSpec> sample_specs(std::size_t p, double discretize_prob, const std::vector<double>& thresholds,
                                       Rng& rng);

/// Draws one dataset from the latent SEM. Columns are generated in topological
/// order; each column's errors are N_n(0, Sigma) through the per-block Cholesky
/// factor, and discrete parents enter through their observed codes.
MixedDataset gen_mixed_data(const DagModel& model, const BlockCovariance& cov, Rng& rng);

/// Same as above after first drawing which nodes are discrete.
MixedDataset gen_mixed_data(DagModel& model, const BlockCovariance& cov, double discretize_prob, Rng& rng);

struct SimulationConfig {
    std::size_t n = 100;
    std::size_t p = 100;
    std::size_t edges = 200;
    double discretize_prob = 0.5;
    std::vector<double> thresholds{-1.0, 1.0};
    std::size_t min_block = 10;
    std::size_t max_block = 15;
    /// Independent all-continuous, parentless columns drawn with the same Sigma
    /// (background features for covariance estimation on held-out units).
    std::size_t background = 0;
    std::uint64_t seed = 1;
};

struct Simulation {
    DagModel model;
    BlockCovarianceDraw cov;
    MixedDataset data;
    Matrix background;  // n x background
};

/// Full synthetic protocol with independent sub-streams for the DAG, weights,
/// covariance, variable kinds, noise and background.
Simulation simulate(const SimulationConfig& config);

/// Simulation on a fixed structure (for example a benchmark network edge list).
Simulation simulate_on(const Dag& dag, const SimulationConfig& config);

}  // namespace mixdag
