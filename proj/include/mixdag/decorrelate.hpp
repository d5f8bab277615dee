#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/normal.hpp"
#include "mixdag/parallel.hpp"
#include "mixdag/preestimate.hpp"
#include "mixdag/rng.hpp"

namespace mixdag {

struct GibbsResult {
    Matrix draws;        // draws x block size
    Vector last;         // final state of the chain
    std::size_t pinned = 0;
};

/// Systematic-scan Gibbs sampler for N(0, sigma) truncated to the product of
/// `intervals`. Starts from `start` projected into the box when its size
/// matches, otherwise from the univariate truncated means. Coordinates whose
/// conditional carries no mass are pinned to the nearest feasible bound.
GibbsResult gibbs_truncated_block(const SymMatrix& sigma, const std::vector<Interval>& intervals, Rng& rng,
                                  int burn_in, int draws, const Vector& start = Vector());

struct Algorithm2Config {
    int iterations = 15;
    int burn_in = 100;
    int draws = 200;
    double ridge = 0.1;
    std::uint64_t seed = 1;
};

struct LatentState {
    int iteration = 0;
    Matrix eps;      // n x |D|, columns in increasing discrete-node order
    Matrix z_hat;    // n x p
    Matrix z_tilde;  // n x p
    Matrix beta;     // p x p coefficients used to form z_hat
};

struct Algorithm2Result {
    std::vector<LatentState> states;
    std::size_t pinned = 0;
};

/// Per block b, rows of that block replaced by L_b^T times them, where
/// L_b L_b^T = inverse of sigma_b.
Matrix decorrelate_continuous(const Matrix& columns, const BlockCovariance& cov);

/// Monte Carlo mean of the errors of discrete node j given current coefficients.
/// `warm` holds one chain state per block and is updated in place.
Vector impute_errors(const MixedDataset& x, const std::vector<double>& thresholds, const BlockCovariance& cov,
                     const Vector& eta, std::size_t j, int iteration, const Algorithm2Config& config,
                     std::vector<Vector>& warm, std::size_t* pinned = nullptr, ThreadPool& pool = serial_pool());

Algorithm2Result algorithm2(const MixedDataset& x, const PreEstimate& pre, const BlockCovariance& cov,
                            const Algorithm2Config& config = {}, ThreadPool& pool = serial_pool());

/// The last M de-correlated matrices.
std::vector<Matrix> last_z_tilde(const Algorithm2Result& result, std::size_t M);

}  // namespace mixdag
