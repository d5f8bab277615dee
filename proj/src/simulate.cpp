#include "mixdag/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mixdag {

Dag random_dag(std::size_t p, std::size_t edges, Rng& rng) {
    const std::size_t max_edges = p < 2 ? 0 : p * (p - 1) / 2;
    if (edges > max_edges)
        throw InfeasibleError("random_dag: " + std::to_string(edges) + " edges requested but at most " +
                              std::to_string(max_edges) + " fit in a DAG on " + std::to_string(p) + " nodes");
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = p; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    // Floyd's sampling of `edges` distinct pair indices among max_edges.
    std::vector<std::uint64_t> chosen;
    chosen.reserve(edges);
    std::vector<char> taken(max_edges, 0);
    for (std::size_t j = max_edges - edges; j < max_edges; ++j) {
        const std::size_t t = rng.below(j + 1);
        const std::size_t pick = taken[t] ? j : t;
        taken[pick] = 1;
        chosen.push_back(pick);
    }
    std::sort(chosen.begin(), chosen.end());

    Dag g(p);
    // pair index k enumerates (a, b), a < b, row by row over positions in `order`
    std::size_t k = 0, a = 0, b = 1, next = 0;
    while (next < chosen.size()) {
        if (k == chosen[next]) {
            g.add_edge(order[a], order[b]);
            ++next;
        }
        ++k;
        if (++b == p) {
            ++a;
            b = a + 1;
        }
    }
    return g;
}

Matrix sample_weights(const Dag& g, Rng& rng) {
    const std::size_t p = g.size();
    Matrix w = Matrix::Zero(p, p);
    for (const auto& [from, to] : g.edges()) {
        const double magnitude = rng.uniform(0.6, 0.9);
        w(from, to) = rng.bernoulli(0.5) ? magnitude : -magnitude;
    }
    return w;
}

int quantize(double z, const std::vector<double>& thresholds) {
    // number of thresholds strictly below z
    return static_cast<int>(std::lower_bound(thresholds.begin(), thresholds.end(), z) - thresholds.begin());
}

SymMatrix equal_block(std::size_t size, double theta) {
    Matrix m = Matrix::Constant(size, size, theta);
    m.diagonal().setOnes();
    return SymMatrix(std::move(m));
}

SymMatrix toeplitz_block(std::size_t size, double theta) {
    Matrix m(size, size);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j)
            m(i, j) = i == j ? 1.0 : std::pow(theta, std::fabs(double(i) - double(j)) / 5.0);
    return SymMatrix(std::move(m));
}

BlockCovarianceDraw make_block_cov(std::size_t n, Rng& rng, std::size_t min_size, std::size_t max_size) {
    if (n == 0) throw std::invalid_argument("make_block_cov: n must be positive");
    if (min_size == 0 || max_size < min_size) throw std::invalid_argument("make_block_cov: invalid size range");
    BlockCovarianceDraw out;
    std::vector<CovarianceBlock> blocks;
    std::size_t start = 0;
    while (start < n) {
        std::size_t size = min_size + rng.below(max_size - min_size + 1);
        size = std::min(size, n - start);
        const bool equal = rng.bernoulli(0.5);
        BlockDesign design{equal ? BlockPattern::equal : BlockPattern::toeplitz,
                           equal ? rng.uniform(0.4, 0.7) : rng.uniform(0.1, 0.25), size};
        std::vector<std::size_t> units(size);
        std::iota(units.begin(), units.end(), start);
        blocks.push_back({std::move(units), equal ? equal_block(size, design.theta) : toeplitz_block(size, design.theta)});
        out.designs.push_back(design);
        start += size;
    }
    out.cov = BlockCovariance(n, std::move(blocks));
    return out;
}

std::vector<VariableSpec> sample_specs(std::size_t p, double discretize_prob, const std::vector<double>& thresholds,
                                       Rng& rng) {
    std::vector<VariableSpec> specs;
    specs.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
        std::string name = "X" + std::to_string(j + 1);
        if (rng.bernoulli(discretize_prob))
            specs.push_back(VariableSpec::make_discrete(std::move(name), static_cast<int>(thresholds.size()) + 1,
                                                        thresholds));
        else
            specs.push_back(VariableSpec::make_continuous(std::move(name)));
    }
    return specs;
}

namespace {
Vector block_noise(const BlockCovariance& cov, const std::vector<Matrix>& factors, Rng& rng) {
    Vector eps(cov.n());
    for (std::size_t b = 0; b < cov.block_count(); ++b) {
        const auto& units = cov.blocks()[b].units;
        Vector u(units.size());
        for (auto& v : u) v = rng.normal();
        const Vector e = factors[b] * u;
        for (std::size_t i = 0; i < units.size(); ++i) eps(units[i]) = e(i);
    }
    return eps;
}
}  // namespace

MixedDataset gen_mixed_data(const DagModel& model, const BlockCovariance& cov, Rng& rng) {
    model.validate();
    const std::size_t p = model.size();
    const std::size_t n = cov.n();
    std::vector<Matrix> factors;
    for (const auto& b : cov.blocks()) factors.push_back(cholesky_lower(b.sigma));

    MixedDataset data;
    data.values = Matrix::Zero(n, p);
    data.specs = model.specs;
    for (std::size_t i = 0; i < n; ++i) data.unit_ids.push_back("u" + std::to_string(i + 1));
    data.block.assign(n, 0);
    for (std::size_t b = 0; b < cov.block_count(); ++b)
        for (std::size_t u : cov.blocks()[b].units) data.block[u] = b;

    for (std::size_t j : topological_order(model.dag)) {
        Rng col_rng = rng.child("noise", {j});
        Vector z = block_noise(cov, factors, col_rng);
        for (std::size_t k : model.dag.parents(j)) z += model.weights(k, j) * data.values.col(k);
        if (model.specs[j].is_discrete()) {
            for (std::size_t i = 0; i < n; ++i) data.values(i, j) = quantize(z(i), model.specs[j].thresholds);
        } else {
            data.values.col(j) = z;
        }
    }
    return data;
}

MixedDataset gen_mixed_data(DagModel& model, const BlockCovariance& cov, double discretize_prob, Rng& rng) {
    Rng spec_rng = rng.child("specs");
    model.specs = sample_specs(model.size(), discretize_prob, {-1.0, 1.0}, spec_rng);
    return gen_mixed_data(static_cast<const DagModel&>(model), cov, rng);
}

Simulation simulate_on(const Dag& dag, const SimulationConfig& config) {
    Simulation sim;
    Rng weight_rng = Rng::stream(config.seed, "weights");
    Rng cov_rng = Rng::stream(config.seed, "covariance");
    Rng spec_rng = Rng::stream(config.seed, "specs");
    Rng noise_rng = Rng::stream(config.seed, "data");
    sim.model.dag = dag;
    sim.model.weights = sample_weights(dag, weight_rng);
    sim.model.specs = sample_specs(dag.size(), config.discretize_prob, config.thresholds, spec_rng);
    for (std::size_t j = 0; j < dag.size(); ++j)
        if (dag.labels().size() == dag.size() && dag.labels()[j] != "X" + std::to_string(j))
            sim.model.specs[j].name = dag.labels()[j];
    sim.cov = make_block_cov(config.n, cov_rng, config.min_block, config.max_block);
    sim.data = gen_mixed_data(sim.model, sim.cov.cov, noise_rng);
    if (config.background > 0) {
        std::vector<Matrix> factors;
        for (const auto& b : sim.cov.cov.blocks()) factors.push_back(cholesky_lower(b.sigma));
        sim.background.resize(config.n, config.background);
        for (std::size_t q = 0; q < config.background; ++q) {
            Rng bg_rng = Rng::stream(config.seed, "background", {q});
            sim.background.col(q) = block_noise(sim.cov.cov, factors, bg_rng);
        }
    }
    return sim;
}

Simulation simulate(const SimulationConfig& config) {
    Rng dag_rng = Rng::stream(config.seed, "dag");
    return simulate_on(random_dag(config.p, config.edges, dag_rng), config);
}

}  // namespace mixdag
