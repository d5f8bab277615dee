#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/learn.hpp"
#include "mixdag/normal.hpp"
#include "mixdag/parallel.hpp"

namespace mixdag {

class DegenerateLevelError : public std::invalid_argument {
public:
    DegenerateLevelError(int level, const std::string& what) : std::invalid_argument(what), level_(level) {}
    int level() const { return level_; }

private:
    int level_;
};

using ParentSets = std::vector<std::vector<std::size_t>>;

struct TraceStep {
    int iteration = 0;
    double d_beta = 0.0;
    double d_thresholds = 0.0;
    double loglik_after_beta = 0.0;
    double loglik_after_thresholds = 0.0;
};

struct NodeTrace {
    std::size_t node = 0;
    std::vector<TraceStep> steps;
    bool converged = false;
    bool smoothed_start = false;  // an extreme level was empty
    bool ridge_fallback = false;
    /// Times the observed log-likelihood dropped by more than 1e-8 (1 + |l|).
    int monotonicity_violations = 0;
};

struct PreEstimate {
    /// Per node; empty for continuous nodes.
    std::vector<std::vector<double>> thresholds;
    /// coefficients(k, j) multiplies x_k in the equation of node j.
    Matrix coefficients;
    ParentSets parents;
    /// One entry per discrete node in increasing node order.
    std::vector<NodeTrace> trace;
    std::vector<std::string> warnings;
};

struct Algorithm1Options {
    int inner_em = 10;
    double tolerance = 1e-3;
    int max_outer = 20;
    double delta_min = 1e-3;
    /// Iterate on mean-centered parent columns (reported thresholds are on the original scale).
    bool center_parents = true;
    bool scale_step = true;
    /// EM cycles per beta step for nodes whose thresholds are held fixed.
    int fixed_threshold_em_cap = 1000;
};

/// Thresholds Phi^-1 of the cumulative level frequencies. Empty interior
/// levels get thresholds nudged apart by delta_min.
std::vector<double> initial_thresholds(const Vector& column, int levels, double delta_min = 1e-3);

/// Same with every level count incremented by 1/2, so extreme levels may be empty.
std::vector<double> smoothed_thresholds(const Vector& column, int levels, double delta_min = 1e-3);

/// Interval (t[x-1] - eta, t[x] - eta] of a unit with level x.
Interval level_interval(int level, const std::vector<double>& t, double eta);

/// Observed-data log-likelihood sum_i log P(level_i | t, eta_i); -inf if any mass underflows.
double discrete_loglik(const Vector& column, const std::vector<double>& t, const Vector& eta);

/// Design matrix of the parent columns of x.
Matrix parent_design(const Matrix& values, const std::vector<std::size_t>& parents);

/// Least squares without intercept; ridge 1e-6 when the design is rank deficient,
/// in which case *ridge_used is set (it is never cleared).
Vector least_squares(const Matrix& design, const Vector& y, bool* ridge_used = nullptr);

/// `iters` EM cycles for the probit-type regression of node j on its parents
/// with Sigma = I.
Vector em_beta_step(const MixedDataset& x, std::size_t j, const std::vector<std::size_t>& parents,
                    const std::vector<double>& t, const Vector& beta0, int iters, bool* ridge_used = nullptr);

/// Maximizes the observed log-likelihood in the thresholds for fixed eta, over
/// delta_1 = t_1 free and delta_c = t_c - t_{c-1} >= delta_min.
std::vector<double> optimize_thresholds(const Vector& column, const Vector& eta, const std::vector<double>& t0,
                                        double delta_min = 1e-3);

/// Gradient of discrete_loglik with respect to the thresholds.
Vector threshold_gradient(const Vector& column, const std::vector<double>& t, const Vector& eta);

PreEstimate algorithm1(const MixedDataset& x, const ParentSets& parents, const Algorithm1Options& options = {},
                       ThreadPool& pool = serial_pool());

/// Parent sets of a DAG extension of the hybrid learner's CPDAG on z-scored raw data.
ParentSets baseline_parents(const MixedDataset& x, const LearnOptions& options = {}, ThreadPool& pool = serial_pool());

/// Parent sets of a DAG.
ParentSets parents_of(const Dag& g);

}  // namespace mixdag
