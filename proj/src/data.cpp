#include "mixdag/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mixdag {

VariableSpec VariableSpec::make_continuous(std::string name) {
    return VariableSpec{std::move(name), VarKind::continuous, 0, {}};
}

VariableSpec VariableSpec::make_discrete(std::string name, int levels, std::vector<double> thresholds) {
    VariableSpec s{std::move(name), VarKind::discrete, levels, std::move(thresholds)};
    s.validate();
    return s;
}

void VariableSpec::validate() const {
    if (!is_discrete()) return;
    if (levels < 2) throw std::invalid_argument("variable " + name + ": discrete variables need at least 2 levels");
    if (thresholds.empty()) return;
    if (static_cast<int>(thresholds.size()) != levels - 1)
        throw std::invalid_argument("variable " + name + ": expected levels - 1 thresholds");
    for (std::size_t c = 1; c < thresholds.size(); ++c)
        if (!(thresholds[c - 1] < thresholds[c]))
            throw std::invalid_argument("variable " + name + ": thresholds must be strictly increasing");
}

void DagModel::validate() const {
    const std::size_t p = dag.size();
    if (static_cast<std::size_t>(weights.rows()) != p || static_cast<std::size_t>(weights.cols()) != p)
        throw std::invalid_argument("DagModel: weight matrix must be p x p");
    if (specs.size() != p) throw std::invalid_argument("DagModel: one variable spec per node required");
    for (std::size_t k = 0; k < p; ++k)
        for (std::size_t j = 0; j < p; ++j)
            if (weights(k, j) != 0.0 && !dag.has_edge(k, j))
                throw std::invalid_argument("DagModel: weight outside the edge set");
    for (const auto& s : specs) {
        s.validate();
        if (s.is_discrete() && s.thresholds.empty())
            throw std::invalid_argument("DagModel: discrete node " + s.name + " has no thresholds");
    }
}

BlockCovariance::BlockCovariance(std::size_t n, std::vector<CovarianceBlock> blocks)
    : n_(n), blocks_(std::move(blocks)) {
    std::vector<char> seen(n, 0);
    for (const auto& b : blocks_) {
        if (static_cast<std::size_t>(b.sigma.dim()) != b.units.size())
            throw std::invalid_argument("BlockCovariance: block matrix size does not match its unit list");
        for (std::size_t u : b.units) {
            if (u >= n || seen[u]) throw std::invalid_argument("BlockCovariance: blocks must partition the units");
            seen[u] = 1;
        }
        for (Eigen::Index i = 0; i < b.sigma.dim(); ++i)
            if (std::fabs(b.sigma(i, i) - 1.0) > 1e-9)
                throw std::invalid_argument("BlockCovariance: diagonal must be 1");
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw std::invalid_argument("BlockCovariance: blocks must cover every unit");
}

BlockCovariance BlockCovariance::identity(const std::vector<std::vector<std::size_t>>& groups) {
    std::size_t n = 0;
    std::vector<CovarianceBlock> blocks;
    for (const auto& g : groups) {
        n += g.size();
        blocks.push_back({g, SymMatrix::identity(static_cast<Eigen::Index>(g.size()))});
    }
    return BlockCovariance(n, std::move(blocks));
}

BlockCovariance BlockCovariance::identity(std::size_t n) {
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[i] = {i};
    return identity(groups);
}

Matrix BlockCovariance::dense() const {
    Matrix m = Matrix::Zero(n_, n_);
    for (const auto& b : blocks_)
        for (std::size_t i = 0; i < b.units.size(); ++i)
            for (std::size_t j = 0; j < b.units.size(); ++j) m(b.units[i], b.units[j]) = b.sigma(i, j);
    return m;
}

std::vector<std::size_t> MixedDataset::discrete_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < specs.size(); ++j)
        if (specs[j].is_discrete()) out.push_back(j);
    return out;
}

std::vector<std::size_t> MixedDataset::continuous_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < specs.size(); ++j)
        if (!specs[j].is_discrete()) out.push_back(j);
    return out;
}

std::vector<std::string> MixedDataset::names() const {
    std::vector<std::string> out;
    for (const auto& s : specs) out.push_back(s.name);
    return out;
}

std::vector<std::vector<std::size_t>> groups_from_ids(const std::vector<std::size_t>& block_ids) {
    std::map<std::size_t, std::vector<std::size_t>> by_id;
    for (std::size_t i = 0; i < block_ids.size(); ++i) by_id[block_ids[i]].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [id, units] : by_id) out.push_back(std::move(units));
    return out;
}

std::vector<std::vector<std::size_t>> MixedDataset::block_groups() const {
    if (block.empty()) {
        std::vector<std::vector<std::size_t>> singletons(n());
        for (std::size_t i = 0; i < n(); ++i) singletons[i] = {i};
        return singletons;
    }
    return groups_from_ids(block);
}

MixedDataset MixedDataset::subset_rows(const std::vector<std::size_t>& rows) const {
    MixedDataset out;
    out.specs = specs;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    std::map<std::size_t, std::size_t> relabel;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(rows[r]));
        if (!unit_ids.empty()) out.unit_ids.push_back(unit_ids[rows[r]]);
        if (!block.empty()) {
            auto [it, inserted] = relabel.try_emplace(block[rows[r]], relabel.size());
            out.block.push_back(it->second);
        }
    }
    return out;
}

void MixedDataset::validate() const {
    if (specs.size() != p()) throw std::invalid_argument("dataset: one spec per column required");
    if (!unit_ids.empty() && unit_ids.size() != n()) throw std::invalid_argument("dataset: unit id count mismatch");
    if (!block.empty() && block.size() != n()) throw std::invalid_argument("dataset: block assignment count mismatch");
    if (!values.allFinite()) throw std::invalid_argument("dataset: missing or non-finite values");
    for (std::size_t j = 0; j < p(); ++j) {
        specs[j].validate();
        if (!specs[j].is_discrete()) continue;
        for (std::size_t i = 0; i < n(); ++i) {
            const double v = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (v != std::round(v) || v < 0 || v > specs[j].levels - 1)
                throw std::invalid_argument("dataset: column " + specs[j].name + " has a code outside [0, C-1]");
        }
    }
}

Matrix zscore_columns(const Matrix& m) {
    Matrix out = m;
    const double n = static_cast<double>(m.rows());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).mean();
        out.col(j).array() -= mean;
        const double sd = std::sqrt(out.col(j).squaredNorm() / n);
        if (sd > 1e-12)
            out.col(j) /= sd;
        else
            out.col(j).setZero();
    }
    return out;
}

}  // namespace mixdag
