#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mixdag/covest.hpp"
#include "mixdag/evaluate.hpp"
#include "mixdag/simulate.hpp"
#include "oracles.hpp"

using namespace mixdag;

namespace {

// Root in (-1, 1) of n rho (1 - rho^2) + (1 + rho^2) Sab - rho (Saa + Sbb): the
// score equation of the unit-variance bivariate normal. Bisection on sign changes
// of a 2000-point scan; the root with the larger likelihood wins.
double oracle_rho(const std::vector<std::pair<double, double>>& r) {
    long double n = r.size(), saa = 0, sbb = 0, sab = 0;
    for (const auto& [a, b] : r) {
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    auto score = [&](long double x) { return n * x * (1 - x * x) + (1 + x * x) * sab - x * (saa + sbb); };
    auto ll = [&](long double x) {
        return -n / 2 * std::log(1 - x * x) - (saa + sbb - 2 * x * sab) / (2 * (1 - x * x));
    };
    long double best = 0, best_ll = -1e300L;
    const int steps = 2000;
    for (int k = 0; k < steps; ++k) {
        long double lo = -0.999L + 1.998L * k / steps, hi = -0.999L + 1.998L * (k + 1) / steps;
        if ((score(lo) > 0) == (score(hi) > 0)) continue;
        for (int it = 0; it < 100; ++it) {
            const long double mid = (lo + hi) / 2;
            ((score(mid) > 0) == (score(lo) > 0) ? lo : hi) = mid;
        }
        if (ll(lo) > best_ll) {
            best_ll = ll(lo);
            best = lo;
        }
    }
    for (long double edge : {-0.999L, 0.999L})
        if (ll(edge) > best_ll) {
            best_ll = ll(edge);
            best = edge;
        }
    return static_cast<double>(best);
}

PairLikelihoodInput correlated_residuals(std::size_t p, double rho, Rng& rng) {
    PairLikelihoodInput in;
    for (std::size_t j = 0; j < p; ++j) {
        const double u = rng.normal(), v = rng.normal();
        in.residuals.emplace_back(u, rho * u + std::sqrt(1 - rho * rho) * v);
    }
    return in;
}

PairLikelihoodInput random_input(Rng& rng) {
    PairLikelihoodInput in = correlated_residuals(5, 0.3, rng);
    const double cuts[] = {-kInf, -1.0, 0.0, 1.0, kInf};
    for (int j = 0; j < 6; ++j) {
        const int la = int(rng.below(4)), lb = int(rng.below(4));
        const double ea = rng.uniform(-1, 1), eb = rng.uniform(-1, 1);
        in.rectangles.emplace_back(Interval(cuts[la] - ea, cuts[la + 1] - ea), Interval(cuts[lb] - eb, cuts[lb + 1] - eb));
    }
    return in;
}

PairLikelihoodInput swapped(const PairLikelihoodInput& in) {
    PairLikelihoodInput out;
    for (const auto& [a, b] : in.residuals) out.residuals.emplace_back(b, a);
    for (const auto& [a, b] : in.rectangles) out.rectangles.emplace_back(b, a);
    return out;
}

double min_eigenvalue(const SymMatrix& m) { return sym_eigen(m).values.minCoeff(); }

// One block, p parentless nodes (half discrete at {-1, 1}), pre-estimated with empty parents.
struct BlockFixture {
    MixedDataset data;
    PreEstimate pre;
    SymMatrix sigma;
};

BlockFixture block_fixture(const SymMatrix& sigma, std::size_t p, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(sigma.dim());
    std::vector<std::size_t> units(n);
    for (std::size_t i = 0; i < n; ++i) units[i] = i;
    DagModel m{Dag(p), Matrix::Zero(p, p), {}};
    Rng rng = Rng::stream(seed, "block-fixture");
    m.specs = sample_specs(p, 0.5, {-1.0, 1.0}, rng);
    BlockFixture f{gen_mixed_data(m, BlockCovariance(n, {CovarianceBlock{units, sigma}}), rng), {}, sigma};
    f.pre = algorithm1(f.data, ParentSets(p));
    return f;
}

}  // namespace

TEST_SUITE("covest") {

TEST_CASE("pair_loglik examples") {
    Rng rng = Rng::stream(1, "pl");
    PairLikelihoodInput in = correlated_residuals(7, 0.0, rng);
    double indep = 0;
    for (const auto& [a, b] : in.residuals) indep += std_normal_logpdf(a) + std_normal_logpdf(b);
    CHECK(pair_loglik(in, 0.0) == doctest::Approx(indep).epsilon(1e-12));

    PairLikelihoodInput orth;
    orth.rectangles.emplace_back(Interval(-kInf, 0.0), Interval(-kInf, 0.0));
    CHECK(pair_loglik(orth, 0.5) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-9));
    CHECK(pair_loglik(PairLikelihoodInput{}, 0.3) == 0.0);

    // continuous term against the bivariate density written out
    const double rho = -0.45;
    double expected = 0;
    for (const auto& [a, b] : in.residuals)
        expected += -std::log(2 * std::numbers::pi * std::sqrt(1 - rho * rho)) -
                    (a * a - 2 * rho * a * b + b * b) / (2 * (1 - rho * rho));
    CHECK(pair_loglik(in, rho) == doctest::Approx(expected).epsilon(1e-12));

    PairLikelihoodInput dead;
    dead.rectangles.emplace_back(Interval(40.0, kInf), Interval(-kInf, -40.0));
    CHECK(std::isinf(pair_loglik(dead, 0.9)));
}

TEST_CASE("estimate_rho matches the score-equation root") {
    for (double rho : {0.6, 0.0, -0.3}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng rng = Rng::stream(seed, "rho", {std::uint64_t(rho * 10 + 5)});
            const PairLikelihoodInput in = correlated_residuals(500, rho, rng);
            const double est = estimate_rho(in);
            CHECK(std::fabs(est - oracle_rho(in.residuals)) < 1e-4);
            if (rho == 0.6) CHECK(std::fabs(est - rho) < 0.08);
            if (rho == 0.0) CHECK(std::fabs(est) <= 0.1);
        }
    }
    PairLikelihoodInput same;
    Rng rng = Rng::stream(2, "same");
    for (int j = 0; j < 20; ++j) {
        const double v = rng.normal();
        same.residuals.emplace_back(v, v);
    }
    CHECK(estimate_rho(same) == doctest::Approx(kRhoCap).epsilon(1e-6));

    PairLikelihoodInput dead;
    dead.rectangles.emplace_back(Interval(40.0, kInf), Interval(-kInf, -40.0));
    CHECK_THROWS_AS(estimate_rho(dead), EstimationFailedError);
}

TEST_CASE("estimate_rho beats the 201-point grid") {
    Rng rng = Rng::stream(3, "grid");
    for (int t = 0; t < 40; ++t) {
        const PairLikelihoodInput in = random_input(rng);
        const double est = estimate_rho(in);
        double grid_best = -kInf;
        for (int k = 0; k <= 200; ++k) grid_best = std::max(grid_best, pair_loglik(in, -0.999 + 1.998 * k / 200));
        CHECK(pair_loglik(in, est) >= grid_best - 1e-8);
    }
}

TEST_CASE("pair_loglik is continuous in rho") {
    Rng rng = Rng::stream(4, "cont");
    auto max_jump = [](const PairLikelihoodInput& in, double from, double to, double step) {
        double worst = 0, prev = pair_loglik(in, from);
        for (double r = from + step; r <= to + 1e-12; r += step) {
            const double now = pair_loglik(in, r);
            // transitions into the underflow sentinel are genuine
            if (std::isinf(now) || std::isinf(prev)) {
                prev = now;
                continue;
            }
            worst = std::max(worst, std::fabs(now - prev) / (1 + std::fabs(now)));
            prev = now;
        }
        return worst;
    };
    for (int t = 0; t < 10; ++t) {
        const PairLikelihoodInput in = random_input(rng);
        CHECK(max_jump(in, -0.9, 0.9, 1e-3) <= 1e-2);
        // the 1/(1 - rho^2) terms are steep near the caps
        CHECK(max_jump(in, 0.9, 0.999, 1e-5) <= 1e-2);
        CHECK(max_jump(in, -0.999, -0.9, 1e-5) <= 1e-2);
    }
}

TEST_CASE("estimate_rho is symmetric in the two units") {
    Rng rng = Rng::stream(5, "sym");
    for (int t = 0; t < 30; ++t) {
        const PairLikelihoodInput in = random_input(rng);
        CHECK(estimate_rho(in) == estimate_rho(swapped(in)));
    }
    const BlockFixture f = block_fixture(equal_block(4, 0.5), 40, 9);
    const Matrix eta = fitted_values(f.data, f.pre);
    CHECK(estimate_rho(pair_input(f.data, f.pre, eta, 0, 3)) == estimate_rho(pair_input(f.data, f.pre, eta, 3, 0)));
}

TEST_CASE("psd_repair") {
    Matrix pd(3, 3);
    pd << 1, 0.3, 0.1, 0.3, 1, 0.2, 0.1, 0.2, 1;
    CHECK((psd_repair(SymMatrix(pd)).matrix() - pd).cwiseAbs().maxCoeff() < 1e-12);

    Matrix ones = Matrix::Ones(2, 2);
    const SymMatrix r = psd_repair(SymMatrix(ones));
    CHECK(r(0, 1) == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(r(0, 0) == 1.0);

    Matrix neg(3, 3);
    neg << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
    REQUIRE(min_eigenvalue(SymMatrix(neg)) < -0.1);
    const SymMatrix fixed = psd_repair(SymMatrix(neg));
    CHECK(min_eigenvalue(fixed) >= 1e-8);
    for (int i = 0; i < 3; ++i) CHECK(fixed(i, i) == 1.0);
}

TEST_CASE("estimate_block_cov") {
    const BlockFixture f = block_fixture(equal_block(10, 0.5), 60, 10);
    std::vector<std::vector<std::size_t>> groups{{0}, {1, 2, 3, 4, 5, 6, 7, 8, 9}};
    CovEstimateReport rep;
    const BlockCovariance cov = estimate_block_cov(f.data, f.pre, groups, serial_pool(), &rep);
    REQUIRE(cov.block_count() == 2);
    CHECK(cov.blocks()[0].sigma.dim() == 1);
    CHECK(cov.blocks()[0].sigma(0, 0) == 1.0);
    CHECK(rep.pairs == 36);
    const Matrix dense = cov.dense();
    for (int i = 1; i < 10; ++i) CHECK(dense(0, i) == 0.0);
    CHECK(min_eigenvalue(cov.blocks()[1].sigma) > 0);

    // entries equal the pairwise estimates
    const Matrix eta = fitted_values(f.data, f.pre);
    if (rep.repaired_blocks == 0) CHECK(dense(2, 5) == estimate_rho(pair_input(f.data, f.pre, eta, 2, 5)));
}

TEST_CASE("Equal block recovery at p = 500") {
    double total = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const BlockFixture f = block_fixture(equal_block(10, 0.5), 500, 100 + seed);
        std::vector<std::size_t> units(10);
        for (std::size_t i = 0; i < 10; ++i) units[i] = i;
        const BlockCovariance est = estimate_block_cov(f.data, f.pre, {units});
        total += cov_rmse(est, BlockCovariance(10, {CovarianceBlock{units, f.sigma}})) / 10;
    }
    MESSAGE("Equal block RMSE " << total);
    CHECK(total <= 0.15);
}

TEST_CASE("continuous estimator on background features") {
    Rng rng = Rng::stream(6, "bg");
    const SymMatrix sigma = toeplitz_block(8, 0.2);
    const Matrix l = cholesky_lower(sigma);
    Matrix features(8, 400);
    for (int k = 0; k < 400; ++k) {
        Vector e(8);
        for (int i = 0; i < 8; ++i) e(i) = rng.normal();
        features.col(k) = l * e;
    }
    std::vector<std::size_t> units{0, 1, 2, 3, 4, 5, 6, 7};
    const BlockCovariance est = estimate_block_cov_continuous(features, {units});
    CHECK((est.dense() - sigma.matrix()).cwiseAbs().maxCoeff() < 0.15);
}

}  // TEST_SUITE
