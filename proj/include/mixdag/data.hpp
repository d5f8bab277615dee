#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mixdag/graphs.hpp"
#include "mixdag/linalg.hpp"

namespace mixdag {

enum class VarKind { continuous, discrete };

struct VariableSpec {
    std::string name;
    VarKind kind = VarKind::continuous;
    int levels = 0;                  // C_j, discrete only
    std::vector<double> thresholds;  // C_j - 1 cut points; empty when not yet estimated

    bool is_discrete() const { return kind == VarKind::discrete; }

    static VariableSpec make_continuous(std::string name);
    static VariableSpec make_discrete(std::string name, int levels, std::vector<double> thresholds = {});

    /// Throws std::invalid_argument if levels < 2 or thresholds are not
    /// strictly increasing with length levels - 1.
    void validate() const;

    bool operator==(const VariableSpec&) const = default;
};

/// Linear latent SEM over a DAG: weights(k, j) is the coefficient of x_k in z_j.
struct DagModel {
    Dag dag;
    Matrix weights;
    std::vector<VariableSpec> specs;

    std::size_t size() const { return dag.size(); }
    /// Throws if weights leave the edge set or discrete nodes lack thresholds.
    void validate() const;
};

struct CovarianceBlock {
    std::vector<std::size_t> units;
    SymMatrix sigma;
};

/// Block-diagonal unit covariance with unit diagonal. Units of a block need
/// not be contiguous; cross-block entries are zero.
class BlockCovariance {
public:
    BlockCovariance() = default;
    BlockCovariance(std::size_t n, std::vector<CovarianceBlock> blocks);

    /// Sigma = I over the given grouping.
    static BlockCovariance identity(const std::vector<std::vector<std::size_t>>& groups);
    /// Sigma = I over n singleton blocks.
    static BlockCovariance identity(std::size_t n);

    std::size_t n() const { return n_; }
    const std::vector<CovarianceBlock>& blocks() const { return blocks_; }
    std::size_t block_count() const { return blocks_.size(); }

    /// Dense n x n matrix (for tests and small problems).
    Matrix dense() const;

private:
    std::size_t n_ = 0;
    std::vector<CovarianceBlock> blocks_;
};

/// n x p observations. Discrete columns hold integer level codes.
struct MixedDataset {
    Matrix values;
    std::vector<VariableSpec> specs;
    std::vector<std::string> unit_ids;
    std::vector<std::size_t> block;  // block index per unit, 0-based and dense

    std::size_t n() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t p() const { return static_cast<std::size_t>(values.cols()); }
    std::vector<std::size_t> discrete_indices() const;
    std::vector<std::size_t> continuous_indices() const;
    std::vector<std::string> names() const;

    /// Unit indices per block, ordered by block index.
    std::vector<std::vector<std::size_t>> block_groups() const;

    /// Rows in the given order; block ids are re-densified by first appearance.
    MixedDataset subset_rows(const std::vector<std::size_t>& rows) const;

    /// Throws std::invalid_argument when shapes disagree or discrete codes fall
    /// outside [0, levels - 1].
    void validate() const;
};

/// Groups unit indices by block id; blocks ordered by id.
std::vector<std::vector<std::size_t>> groups_from_ids(const std::vector<std::size_t>& block_ids);

/// Column-wise z-scores (population variance). Constant columns become zero.
Matrix zscore_columns(const Matrix& m);

}  // namespace mixdag
