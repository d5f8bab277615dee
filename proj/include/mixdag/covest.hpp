#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/normal.hpp"
#include "mixdag/parallel.hpp"
#include "mixdag/preestimate.hpp"

namespace mixdag {

class EstimationFailedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RepairFailedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kRhoCap = 0.999;

/// Per-variable terms of the pairwise likelihood of units a and b.
struct PairLikelihoodInput {
    std::vector<std::pair<double, double>> residuals;            // continuous variables
    std::vector<std::pair<Interval, Interval>> rectangles;       // discrete variables
};

/// Fitted linear predictors eta(i, j) = x_i beta_j.
Matrix fitted_values(const MixedDataset& x, const PreEstimate& pre);

PairLikelihoodInput pair_input(const MixedDataset& x, const PreEstimate& pre, const Matrix& eta, std::size_t a,
                               std::size_t b);

double pair_loglik(const PairLikelihoodInput& input, double rho);

/// Maximizer over [-0.999, 0.999]: 21-point grid, then golden section inside
/// the bracket around the best grid point.
double estimate_rho(const PairLikelihoodInput& input);

/// Negative eigenvalues clamped to 0 and diagonal reset to 1; if the minimum
/// eigenvalue is still below 1e-8, off-diagonals shrink by 0.9 up to 20 times.
SymMatrix psd_repair(const SymMatrix& m);

struct CovEstimateReport {
    std::size_t pairs = 0;
    std::size_t failed_pairs = 0;
    std::size_t repaired_blocks = 0;
};

BlockCovariance estimate_block_cov(const MixedDataset& x, const PreEstimate& pre,
                                   const std::vector<std::vector<std::size_t>>& blocks,
                                   ThreadPool& pool = serial_pool(), CovEstimateReport* report = nullptr);

/// Covariance from an all-continuous, parentless feature matrix (for example
/// background features): the same pairwise estimator with residuals equal to
/// the values.
BlockCovariance estimate_block_cov_continuous(const Matrix& features,
                                              const std::vector<std::vector<std::size_t>>& blocks,
                                              ThreadPool& pool = serial_pool(), CovEstimateReport* report = nullptr);

}  // namespace mixdag
