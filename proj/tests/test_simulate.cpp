#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mixdag/normal.hpp"
#include "mixdag/simulate.hpp"
#include "population.hpp"

using namespace mixdag;

namespace {

DagModel continuous_model(const Dag& g, const Matrix& w) {
    DagModel m{g, w, {}};
    for (std::size_t j = 0; j < g.size(); ++j) m.specs.push_back(VariableSpec::make_continuous("X" + std::to_string(j + 1)));
    return m;
}

double corr(const Vector& a, const Vector& b) {
    const Vector x = a.array() - a.mean(), y = b.array() - b.mean();
    return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("random_dag") {
    Rng rng = Rng::stream(1, "dag");
    CHECK(random_dag(3, 0, rng).edge_count() == 0);
    const Dag full = random_dag(5, 10, rng);
    CHECK(full.edge_count() == 10);
    CHECK(is_acyclic(full));
    const Dag big = random_dag(100, 200, rng);
    CHECK(big.edge_count() == 200);
    CHECK(is_acyclic(big));
    CHECK_THROWS_AS(random_dag(5, 11, rng), InfeasibleError);
}

TEST_CASE("sample_weights") {
    Rng rng = Rng::stream(2, "w");
    const Matrix none = sample_weights(Dag(4), rng);
    CHECK(none.cwiseAbs().maxCoeff() == 0.0);

    double abs_sum = 0;
    std::size_t count = 0, positive = 0;
    for (int t = 0; t < 50; ++t) {
        const Dag g = random_dag(50, 200, rng);
        const Matrix w = sample_weights(g, rng);
        for (std::size_t a = 0; a < 50; ++a)
            for (std::size_t b = 0; b < 50; ++b) {
                if (!g.has_edge(a, b)) {
                    CHECK(w(a, b) == 0.0);
                    continue;
                }
                const double v = std::fabs(w(a, b));
                CHECK(v >= 0.6);
                CHECK(v <= 0.9);
                abs_sum += v;
                positive += w(a, b) > 0;
                ++count;
            }
    }
    CHECK(count == 10000);
    CHECK(std::fabs(abs_sum / count - 0.75) < 0.01);
    CHECK(std::fabs(double(positive) / count - 0.5) < 0.02);
}

TEST_CASE("quantize") {
    const std::vector<double> t{-1.0, 1.0};
    CHECK(quantize(0.5, t) == 1);
    CHECK(quantize(-1.0, t) == 0);
    CHECK(quantize(1.0, t) == 1);
    CHECK(quantize(7.0, t) == 2);
    CHECK(quantize(-7.0, t) == 0);
}

TEST_CASE("block patterns") {
    const SymMatrix e = equal_block(3, 0.5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(e(i, j) == doctest::Approx(i == j ? 1.0 : 0.5));
    const SymMatrix t = toeplitz_block(12, 0.2);
    CHECK(t(0, 5) == doctest::Approx(0.2));
    CHECK(t(2, 12 - 1) == doctest::Approx(std::pow(0.2, 9.0 / 5.0)));
    CHECK(t(3, 3) == 1.0);
}

TEST_CASE("make_block_cov partitions units") {
    Rng rng = Rng::stream(3, "cov");
    for (std::size_t n : {1, 9, 37, 100, 250}) {
        const BlockCovarianceDraw d = make_block_cov(n, rng);
        CHECK(d.cov.n() == n);
        std::vector<int> seen(n, 0);
        const auto& blocks = d.cov.blocks();
        REQUIRE(blocks.size() == d.designs.size());
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const auto& blk = blocks[b];
            if (b + 1 < blocks.size()) {
                CHECK(blk.units.size() >= 10);
                CHECK(blk.units.size() <= 15);
            }
            CHECK(blk.units.size() >= 1);
            for (std::size_t u : blk.units) ++seen[u];
            const auto& des = d.designs[b];
            if (des.pattern == BlockPattern::equal) {
                CHECK(des.theta >= 0.4);
                CHECK(des.theta <= 0.7);
            } else {
                CHECK(des.theta >= 0.1);
                CHECK(des.theta <= 0.25);
            }
            for (Eigen::Index i = 0; i < blk.sigma.dim(); ++i) CHECK(blk.sigma(i, i) == 1.0);
            CHECK_NOTHROW(cholesky_lower(blk.sigma));
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    }
}

TEST_CASE("gen_mixed_data: independent standard normal columns") {
    const std::size_t n = 10000;
    DagModel m = continuous_model(Dag(3), Matrix::Zero(3, 3));
    Rng rng = Rng::stream(4, "iid");
    const MixedDataset x = gen_mixed_data(m, BlockCovariance::identity(n), rng);
    for (int j = 0; j < 3; ++j) {
        std::vector<double> v(x.values.col(j).data(), x.values.col(j).data() + n);
        std::sort(v.begin(), v.end());
        double dmax = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = std_normal_cdf(v[i]);
            dmax = std::max({dmax, std::fabs(f - double(i) / n), std::fabs(f - double(i + 1) / n)});
        }
        CHECK(dmax < 1.9495 / std::sqrt(double(n)));
    }
}

TEST_CASE("gen_mixed_data: single edge correlation") {
    Dag g(2);
    g.add_edge(0, 1);
    Matrix w = Matrix::Zero(2, 2);
    w(0, 1) = 0.8;
    Rng rng = Rng::stream(5, "edge");
    const MixedDataset x = gen_mixed_data(continuous_model(g, w), BlockCovariance::identity(100000), rng);
    CHECK(std::fabs(corr(x.values.col(0), x.values.col(1)) - 0.8 / std::sqrt(1.64)) < 0.01);
}

TEST_CASE("gen_mixed_data: discrete level frequencies") {
    DagModel m{Dag(1), Matrix::Zero(1, 1), {VariableSpec::make_discrete("X1", 3, {-1.0, 1.0})}};
    Rng rng = Rng::stream(6, "disc");
    const std::size_t n = 100000;
    const MixedDataset x = gen_mixed_data(m, BlockCovariance::identity(n), rng);
    std::vector<double> freq(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x.values(i, 0);
        REQUIRE(v == std::round(v));
        freq[static_cast<int>(v)] += 1.0 / n;
    }
    const double tail = std_normal_cdf(-1.0);
    CHECK(std::fabs(freq[0] - tail) < 0.01);
    CHECK(std::fabs(freq[1] - (1 - 2 * tail)) < 0.01);
    CHECK(std::fabs(freq[2] - tail) < 0.01);
}

TEST_CASE("discrete parents enter through their codes") {
    Dag g(2);
    g.add_edge(0, 1);
    Matrix w = Matrix::Zero(2, 2);
    w(0, 1) = 0.8;
    DagModel m{g, w, {VariableSpec::make_discrete("X1", 3, {-1.0, 1.0}), VariableSpec::make_continuous("X2")}};
    Rng rng = Rng::stream(7, "codes");
    const MixedDataset x = gen_mixed_data(m, BlockCovariance::identity(50000), rng);
    // regression of X2 on the code recovers 0.8 and unit residual variance
    const Vector a = x.values.col(0).array() - x.values.col(0).mean();
    const Vector b = x.values.col(1).array() - x.values.col(1).mean();
    const double slope = a.dot(b) / a.squaredNorm();
    CHECK(std::fabs(slope - 0.8) < 0.02);
    CHECK(std::fabs((b - slope * a).squaredNorm() / 50000 - 1.0) < 0.03);
}

TEST_CASE("deterministic given model, covariance and seed") {
    SimulationConfig cfg;
    cfg.n = 40;
    cfg.p = 12;
    cfg.edges = 20;
    cfg.seed = 11;
    const Simulation a = simulate(cfg), b = simulate(cfg);
    CHECK(a.data.values == b.data.values);
    CHECK(a.data.specs == b.data.specs);
    CHECK(a.model.dag == b.model.dag);
    CHECK(a.data.block == b.data.block);
    cfg.seed = 12;
    CHECK_FALSE(simulate(cfg).data.values == a.data.values);

    Rng r1 = Rng::stream(3, "x"), r2 = Rng::stream(3, "x");
    const MixedDataset x1 = gen_mixed_data(a.model, a.cov.cov, r1), x2 = gen_mixed_data(a.model, a.cov.cov, r2);
    CHECK(x1.values == x2.values);
}

TEST_CASE("sample covariance matches the analytic SEM covariance") {
    Rng rng = Rng::stream(8, "sem");
    const std::size_t n = 100000;
    for (int t = 0; t < 5; ++t) {
        const Dag g = random_dag(6, 8, rng);
        const Matrix w = sample_weights(g, rng);
        const MixedDataset x = gen_mixed_data(continuous_model(g, w), BlockCovariance::identity(n), rng);
        const Matrix centered = x.values.rowwise() - x.values.colwise().mean();
        const Matrix s = centered.transpose() * centered / double(n);
        const Matrix c = population::sem_covariance(g, w);
        CHECK((s - c).cwiseAbs().maxCoeff() < 0.05);
        // closed form (I - B)^-T (I - B)^-1 agrees with the recursion
        const Matrix inv = (Matrix::Identity(6, 6) - w).inverse();
        CHECK((inv.transpose() * inv - c).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("within-block noise correlation matches sigma") {
    // one block of units, 10^4 independent parentless columns as replicates
    const std::size_t p = 10000;
    for (const SymMatrix& sigma : {equal_block(8, 0.55), toeplitz_block(12, 0.2)}) {
        const std::size_t n = static_cast<std::size_t>(sigma.dim());
        std::vector<std::size_t> units(n);
        for (std::size_t i = 0; i < n; ++i) units[i] = i;
        BlockCovariance cov(n, {CovarianceBlock{units, sigma}});
        Rng rng = Rng::stream(9, "blk", {n});
        const MixedDataset x = gen_mixed_data(continuous_model(Dag(p), Matrix::Zero(p, p)), cov, rng);
        const Matrix emp = x.values * x.values.transpose() / double(p);
        CHECK((emp - sigma.matrix()).cwiseAbs().maxCoeff() < 0.05);
    }
}

TEST_CASE("simulate wires block ids and background") {
    SimulationConfig cfg;
    cfg.n = 60;
    cfg.p = 20;
    cfg.edges = 40;
    cfg.background = 7;
    const Simulation s = simulate(cfg);
    CHECK(s.data.n() == 60);
    CHECK(s.data.p() == 20);
    CHECK(s.model.dag.edge_count() == 40);
    CHECK(s.background.rows() == 60);
    CHECK(s.background.cols() == 7);
    CHECK_NOTHROW(s.data.validate());
    CHECK_NOTHROW(s.model.validate());
    const auto groups = s.data.block_groups();
    REQUIRE(groups.size() == s.cov.cov.block_count());
    for (std::size_t b = 0; b < groups.size(); ++b) CHECK(groups[b] == s.cov.cov.blocks()[b].units);
    for (const auto& spec : s.data.specs)
        if (spec.is_discrete()) CHECK(spec.thresholds == std::vector<double>{-1.0, 1.0});
}

}  // TEST_SUITE
