#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mixdag/evaluate.hpp"
#include "mixdag/simulate.hpp"

using namespace mixdag;

namespace {

MixedDataset make_dataset(const Matrix& values, std::vector<VariableSpec> specs, std::vector<std::size_t> block = {}) {
    MixedDataset x;
    x.values = values;
    x.specs = std::move(specs);
    for (Eigen::Index i = 0; i < values.rows(); ++i) x.unit_ids.push_back("u" + std::to_string(i));
    if (block.empty())
        for (Eigen::Index i = 0; i < values.rows(); ++i) block.push_back(std::size_t(i));
    x.block = std::move(block);
    return x;
}

BlockCovariance one_block(const SymMatrix& s) {
    std::vector<std::size_t> u(static_cast<std::size_t>(s.dim()));
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = i;
    return BlockCovariance(u.size(), {CovarianceBlock{u, s}});
}

Cpdag random_cpdag(std::size_t p, Rng& rng) {
    Cpdag c(p);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b) {
            const double u = rng.uniform();
            if (u < 0.2)
                c.set_directed(a, b);
            else if (u < 0.4)
                c.set_directed(b, a);
            else if (u < 0.55)
                c.set_undirected(a, b);
        }
    return c;
}

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("cpdag_f1") {
    Cpdag truth(3);
    truth.set_directed(0, 1);
    truth.set_undirected(1, 2);
    CHECK(cpdag_f1(truth, truth).f1 == 1.0);

    Cpdag est(3);
    est.set_directed(0, 1);
    est.set_directed(1, 2);
    const F1Score f = cpdag_f1(truth, est);
    CHECK(f.tp == 2);
    CHECK(f.fp == 0);
    CHECK(f.fn == 1);
    CHECK(f.precision == 1.0);
    CHECK(f.recall == doctest::Approx(2.0 / 3.0));
    CHECK(f.f1 == doctest::Approx(0.8));

    CHECK(cpdag_f1(truth, Cpdag(3)).f1 == 0.0);
    CHECK_THROWS(cpdag_f1(truth, Cpdag(4)));

    Rng rng = Rng::stream(1, "f1");
    for (int t = 0; t < 100; ++t) {
        const Cpdag a = random_cpdag(7, rng), b = random_cpdag(7, rng);
        const F1Score ab = cpdag_f1(a, b), ba = cpdag_f1(b, a);
        CHECK(ab.tp == ba.tp);
        CHECK(ab.fp == ba.fn);
        CHECK(ab.f1 == doctest::Approx(ba.f1));
    }
}

TEST_CASE("cov_rmse and threshold_rmse") {
    Matrix t2(2, 2), e2(2, 2);
    t2 << 1, 0.7, 0.7, 1;
    e2 << 1, 0.5, 0.5, 1;
    const BlockCovariance truth = one_block(SymMatrix(t2));
    CHECK(cov_rmse(truth, truth) == 0.0);
    CHECK(cov_rmse(one_block(SymMatrix(e2)), truth) == doctest::Approx(0.2));

    Matrix t3(3, 3), e3(3, 3);
    t3 << 1, 0.5, 0, 0.5, 1, 0.4, 0, 0.4, 1;
    e3 << 1, 0.6, 0.2, 0.6, 1, 0.1, 0.2, 0.1, 1;
    // entry (0, 2) is zero in truth and excluded
    CHECK(cov_rmse(one_block(SymMatrix(e3)), one_block(SymMatrix(t3))) == doctest::Approx(std::sqrt(0.05)));
    CHECK_THROWS_AS(cov_rmse(BlockCovariance::identity(3), BlockCovariance::identity(3)), UndefinedMetricError);

    const std::vector<std::vector<double>> tt{{-1.0, 1.0}, {}};
    CHECK(threshold_rmse(tt, tt) == 0.0);
    CHECK(threshold_rmse({{0.5}}, {{0.0}}) == doctest::Approx(0.5));
    CHECK(threshold_rmse({{-0.8, 1.1}, {}}, tt) == doctest::Approx(0.1581).epsilon(1e-3));
    CHECK_THROWS(threshold_rmse({{1.0}}, {{1.0, 2.0}}));
}

TEST_CASE("correlation_summary") {
    Rng rng = Rng::stream(2, "cs");
    Matrix same(4, 10);
    for (int k = 0; k < 10; ++k) same.col(k).setConstant(rng.normal());
    const auto s = correlation_summary(same, {{0, 1, 2, 3}});
    CHECK(s.values.size() == 6);
    for (double v : s.values) CHECK(v == doctest::Approx(1.0));
    CHECK(s.counts.size() == 40);
    CHECK(s.bin_left.front() == doctest::Approx(-1.0));
    CHECK(s.counts.back() == 6);

    Matrix ind(20, 500);
    for (Eigen::Index i = 0; i < ind.size(); ++i) ind.data()[i] = rng.normal();
    const auto n = correlation_summary(ind, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {10, 11, 12, 13, 14, 15, 16, 17, 18, 19}});
    double mean_abs = 0;
    for (double v : n.values) mean_abs += std::fabs(v) / double(n.values.size());
    CHECK(mean_abs <= 0.1);
    std::size_t total = 0;
    for (auto c : n.counts) total += c;
    CHECK(total == n.values.size());
    CHECK_THROWS_AS(correlation_summary(ind, {{0}, {1}}), UndefinedMetricError);
}

TEST_CASE("test_loglik closed forms") {
    Rng rng = Rng::stream(3, "ll");
    Matrix v(40, 1);
    for (int i = 0; i < 40; ++i) v(i, 0) = rng.normal();
    const MixedDataset x = make_dataset(v, {VariableSpec::make_continuous("X1")});
    const DagModel null{Dag(1), Matrix::Zero(1, 1), x.specs};
    const LoglikEstimate ll = test_loglik(x, null, BlockCovariance::identity(40));
    CHECK(ll.value == doctest::Approx(-0.5 * v.squaredNorm() / 40 - 0.5 * std::log(2 * std::numbers::pi)));
    CHECK(ll.standard_error == 0.0);

    Matrix one(1, 1);
    one << 1;
    const auto bin = std::vector<VariableSpec>{VariableSpec::make_discrete("X1", 2, {0.0})};
    const MixedDataset xb = make_dataset(one, bin);
    CHECK(test_loglik(xb, DagModel{Dag(1), Matrix::Zero(1, 1), bin}, BlockCovariance::identity(1)).value ==
          doctest::Approx(std::log(0.5)));

    Matrix two(2, 1);
    two << 1, 1;
    const MixedDataset x2 = make_dataset(two, bin, {0, 0});
    const LoglikEstimate g = test_loglik(x2, DagModel{Dag(1), Matrix::Zero(1, 1), bin}, one_block(equal_block(2, 0.5)));
    CHECK(std::fabs(g.value - std::log(1.0 / 3.0) / 2) <= 3 * g.standard_error + 1e-12);

    // continuous block term is the multivariate normal density
    const SymMatrix s = toeplitz_block(3, 0.2);
    Matrix r(3, 1);
    r << 0.3, -1.1, 0.7;
    const MixedDataset x3 = make_dataset(r, {VariableSpec::make_continuous("X1")}, {0, 0, 0});
    const Matrix inv = spd_inverse(s);
    const double dens = -0.5 * (3 * std::log(2 * std::numbers::pi) + std::log(s.matrix().determinant()) +
                                (r.transpose() * inv * r)(0, 0));
    CHECK(test_loglik(x3, DagModel{Dag(1), Matrix::Zero(1, 1), x3.specs}, one_block(s)).value ==
          doctest::Approx(dens / 3));
}

TEST_CASE("ghk estimator converges with replications") {
    const SymMatrix s = equal_block(3, 0.4);
    const std::vector<Interval> box{Interval(-0.2, kInf), Interval(-kInf, 0.5), Interval(-1.0, 1.0)};
    double se1 = 0, se2 = 0;
    Rng r1 = Rng::stream(4, "ghk-a"), r2 = Rng::stream(4, "ghk-b");
    const double a = ghk_log_probability(s, box, 500, r1, &se1);
    const double b = ghk_log_probability(s, box, 1000, r2, &se2);
    CHECK(std::fabs(a - b) < 3 * std::hypot(se1, se2));

    // two dimensions reduce to the bivariate rectangle
    double se = 0;
    Rng r3 = Rng::stream(4, "ghk-c");
    const double l2 = ghk_log_probability(equal_block(2, 0.6), {box[0], box[1]}, 4000, r3, &se);
    CHECK(std::fabs(l2 - std::log(bivariate_normal_rect(box[0], box[1], 0.6))) < 3 * se + 1e-12);
}

TEST_CASE("assign_folds") {
    const std::vector<std::vector<std::size_t>> blocks{{0, 1, 2, 3, 4}, {5, 6}, {7, 8, 9}, {10}, {11, 12, 13, 14}};
    const auto f = assign_folds(blocks, 2);
    REQUIRE(f.size() == 2);
    // sizes 5, 4, 3, 2, 1 land in A, B, B, A, A (ties go to the first fold)
    CHECK(f[0] == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 10});
    CHECK(f[1] == std::vector<std::size_t>{7, 8, 9, 11, 12, 13, 14});
    CHECK_THROWS(assign_folds(blocks, 6));
    CHECK_THROWS(assign_folds(blocks, 0));
}

TEST_CASE("blocked_cv table shape") {
    SimulationConfig sc;
    sc.n = 60;
    sc.p = 8;
    sc.edges = 8;
    sc.background = 10;
    const Simulation s = simulate(sc);
    CvConfig cfg;
    cfg.folds = 3;
    cfg.strategies = {Strategy::baseline};
    cfg.loglik.replications = 50;
    const CvResult r = blocked_cv(s.data, s.background, cfg);
    REQUIRE(r.folds.size() == 3);
    CHECK(r.medians.size() == 1);
    std::size_t units = 0;
    for (const auto& f : r.folds) {
        CHECK(f.loglik.size() == 1);
        CHECK(std::isfinite(f.loglik[0]));
        units += f.test_units;
    }
    CHECK(units == 60);
    cfg.folds = 100;
    CHECK_THROWS(blocked_cv(s.data, s.background, cfg));
}

TEST_CASE("consensus-ident is consensus with the identity covariance") {
    SimulationConfig sc;
    sc.n = 40;
    sc.p = 8;
    sc.edges = 8;
    const Simulation s = simulate(sc);
    PipelineConfig pc;
    pc.strategy = Strategy::consensus_ident;
    pc.alg2.iterations = 3;
    pc.M = 2;
    const PipelineResult r = run_pipeline(s.data, s.data.block_groups(), pc);
    const auto groups = s.data.block_groups();
    REQUIRE(r.cov.block_count() == groups.size());
    for (std::size_t b = 0; b < groups.size(); ++b) {
        CHECK(r.cov.blocks()[b].units == groups[b]);
        CHECK(r.cov.blocks()[b].sigma.matrix().isIdentity(0.0));
    }
    // with Sigma = I the latent matrices are not transformed
    for (const auto& st : r.latent.states) CHECK(st.z_tilde == st.z_hat);
}

TEST_CASE("edge confidence arithmetic") {
    Cpdag a(2), b(2);
    a.set_directed(0, 1);
    b.set_undirected(0, 1);
    const EdgeConfidence c = edge_confidence({a, b});
    CHECK(c.directed(0, 1) == doctest::Approx(0.75));
    CHECK(c.directed(1, 0) == doctest::Approx(0.25));
    CHECK(c.undirected(0, 1) == doctest::Approx(1.0));

    Cpdag full(3);
    full.set_undirected(0, 1);
    full.set_undirected(1, 2);
    EdgeConfidence conf(3);
    conf.at(0, 1) = 0.60;
    conf.at(1, 0) = 0.15;
    conf.at(1, 2) = 0.30;
    conf.at(2, 1) = 0.25;
    const Cpdag g = confident_graph(full, conf);
    CHECK(g.has_directed(0, 1));
    CHECK(g.has_undirected(1, 2));

    Cpdag d(3);
    d.set_directed(0, 2);
    EdgeConfidence low(3);
    low.at(0, 2) = 0.45;
    CHECK(confident_graph(d, low).edge_count() == 0);
    low.at(0, 2) = 0.5;
    CHECK(confident_graph(d, low).has_directed(0, 2));

    Rng rng = Rng::stream(5, "conf");
    std::vector<Cpdag> reps;
    for (int t = 0; t < 30; ++t) reps.push_back(random_cpdag(6, rng));
    const EdgeConfidence rc = edge_confidence(reps);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(rc.directed(i, j) >= 0.0);
            CHECK(rc.undirected(i, j) <= 1.0 + 1e-12);
        }
}

TEST_CASE("bootstrap with one replicate gives confidences in {0, 1/2, 1}") {
    SimulationConfig sc;
    sc.n = 60;
    sc.p = 8;
    sc.edges = 10;
    const Simulation s = simulate(sc);
    BootstrapConfig bc;
    bc.replicates = 1;
    bc.pipeline.alg2.iterations = 3;
    bc.pipeline.M = 2;
    const BootstrapResult r = bootstrap_confidence(s.data, bc);
    CHECK(r.effective == 1);
    CHECK(r.failed == 0);
    for (std::size_t a = 0; a < 8; ++a)
        for (std::size_t b = 0; b < 8; ++b) {
            const double v = r.confidence.directed(a, b);
            CHECK((v == 0.0 || v == 0.5 || v == 1.0));
        }
    const BootstrapResult again = bootstrap_confidence(s.data, bc);
    CHECK(again.final_graph == r.final_graph);
}

}  // TEST_SUITE
