#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/rng.hpp"

namespace mixdag {

class GmmFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GmmFit {
    std::vector<double> weights, means, variances;
    double loglik = 0.0;
    int iterations = 0;
    /// Times the EM log-likelihood decreased by more than 1e-9 (1 + |l|).
    int decreases = 0;
};

/// EM for a K-component univariate Gaussian mixture, best of 5 k-means++
/// restarts. K = 1 is the closed-form fit.
GmmFit fit_gmm(const std::vector<double>& column, int K, Rng& rng);

/// Royston's approximation (AS R94) to the Shapiro-Wilk test.
struct ShapiroWilk {
    double w = 0.0;
    double p_value = 0.0;
};
ShapiroWilk shapiro_wilk(std::vector<double> sample);

enum class ColumnModel { gauss1, gmm2, gmm3 };
std::string to_string(ColumnModel m);

struct DiscretizationEntry {
    std::string name;
    ColumnModel chosen = ColumnModel::gauss1;
    std::vector<double> bic;                   // K = 1, 2, 3; +inf for failed fits
    std::vector<double> component_p_values;    // of the chosen mixture
    bool discrete = false;
    int levels = 0;
    std::vector<int> codes;                    // when discrete
    bool pinned = false;
    std::string warning;
};

/// Picks the smallest-BIC model (k = 3K - 1 parameters); a mixture column is
/// discretized only if some component fails Shapiro-Wilk at 0.05.
DiscretizationEntry discretization_test(const std::vector<double>& column, Rng& rng);

/// Ward linkage on Euclidean distances of z-scored columns, cut at k clusters.
/// Block ids are numbered by the first unit of each cluster.
std::vector<std::size_t> hier_cluster_blocks(const Matrix& background, std::size_t k);

struct IngestOptions {
    /// name -> "continuous" or "discrete" (skips the test for that column)
    std::map<std::string, std::string> overrides;
    bool standardize_continuous = true;
    std::uint64_t seed = 1;
};

struct IngestResult {
    MixedDataset data;
    std::vector<DiscretizationEntry> report;
};

IngestResult ingest_expression(const std::string& csv_path, const IngestOptions& options = {});

}  // namespace mixdag
