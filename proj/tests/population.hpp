#pragma once

// Population covariance of linear Gaussian SEMs and a fixed catalog of small DAGs.

#include <cmath>
#include <vector>

#include "mixdag/graphs.hpp"
#include "mixdag/linalg.hpp"

namespace population {

/// Cov(X) for X_j = sum_k w(k, j) X_k + e_j with unit-variance noise, by
/// recursion over a topological order.
inline mixdag::Matrix sem_covariance(const mixdag::Dag& g, const mixdag::Matrix& w) {
    const std::size_t p = g.size();
    mixdag::Matrix c = mixdag::Matrix::Zero(p, p);
    std::vector<std::size_t> done;
    for (std::size_t j : mixdag::topological_order(g)) {
        for (std::size_t k : done) {
            double s = 0;
            for (std::size_t q : g.parents(j)) s += w(q, j) * c(q, k);
            c(j, k) = c(k, j) = s;
        }
        double v = 1;
        for (std::size_t q : g.parents(j))
            for (std::size_t r : g.parents(j)) v += w(q, j) * w(r, j) * c(q, r);
        c(j, j) = v;
        done.push_back(j);
    }
    return c;
}

inline mixdag::SymMatrix correlation(const mixdag::Matrix& cov) {
    const mixdag::Vector d = cov.diagonal().cwiseSqrt().cwiseInverse();
    return mixdag::SymMatrix(d.asDiagonal() * cov * d.asDiagonal());
}

/// Weights 0.5 + 0.1 * (edge index mod 4): positive and distinct enough to avoid path cancellation.
inline mixdag::Matrix catalog_weights(const mixdag::Dag& g) {
    mixdag::Matrix w = mixdag::Matrix::Zero(g.size(), g.size());
    int k = 0;
    for (const auto& [a, b] : g.edges()) w(a, b) = 0.5 + 0.1 * (k++ % 4);
    return w;
}

inline mixdag::Dag make(std::size_t p, std::initializer_list<mixdag::Edge> edges) {
    mixdag::Dag g(p);
    for (const auto& [a, b] : edges) g.add_edge(a, b);
    return g;
}

inline std::vector<mixdag::Dag> catalog5() {
    return {
        make(5, {}),
        make(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}),
        make(5, {{0, 2}, {1, 2}, {2, 3}, {3, 4}}),
        make(5, {{2, 0}, {2, 1}, {2, 3}, {2, 4}}),
        make(5, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}}),
        make(5, {{0, 4}, {1, 4}, {2, 4}, {3, 4}}),
        make(5, {{0, 1}, {1, 2}, {0, 2}, {3, 2}, {3, 4}}),
        make(5, {{0, 2}, {1, 2}, {1, 3}, {4, 3}}),
        make(5, {{0, 1}, {2, 3}, {1, 4}, {3, 4}}),
        make(5, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 4}, {3, 4}}),
    };
}

}  // namespace population
