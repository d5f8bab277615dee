#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mixdag/linalg.hpp"
#include "mixdag/normal.hpp"
#include "mixdag/optimize.hpp"
#include "mixdag/rng.hpp"
#include "oracles.hpp"

using namespace mixdag;

TEST_SUITE("mathcore") {

TEST_CASE("std_normal_cdf") {
    CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std_normal_cdf(kInf) == 1.0);
    CHECK(std_normal_cdf(-kInf) == 0.0);
    const double oracle_value = static_cast<double>(oracle::phi_cdf(1.959964L));
    CHECK(std::fabs(oracle_value - 0.975) < 1e-8);
    CHECK(std::fabs(std_normal_cdf(1.959964) - oracle_value) < 1e-9);
    for (double x = -8.0; x <= 8.0; x += 0.37) {
        CHECK(std::fabs(std_normal_cdf(x) - static_cast<double>(oracle::phi_cdf(x))) < 1e-12);
        CHECK(std::fabs(std_normal_cdf(-x) - (1.0 - std_normal_cdf(x))) < 1e-12);
    }
}

TEST_CASE("std_normal_quantile") {
    CHECK(std_normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(std_normal_quantile(std_normal_cdf(1.0)) == doctest::Approx(1.0).epsilon(1e-10));
    // bisection on the series oracle
    double lo = -3, hi = 3;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (oracle::phi_cdf(mid) < 1.0L / 3.0L ? lo : hi) = mid;
    }
    CHECK(std::fabs(lo - (-0.430727)) < 1e-6);
    CHECK(std::fabs(std_normal_quantile(1.0 / 3.0) - lo) < 1e-9);
    CHECK_THROWS(std_normal_quantile(0.0));
    CHECK_THROWS(std_normal_quantile(1.0));
    CHECK_THROWS(std_normal_quantile(-0.1));
}

TEST_CASE("quantile and cdf are mutual inverses") {
    for (double lp = -12; lp < -1e-3; lp += 0.05) {
        const double p = std::pow(10.0, lp);
        CHECK(std::fabs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-8 * std::max(p, 1e-4));
        CHECK(std::fabs(std_normal_cdf(std_normal_quantile(1 - p)) - (1 - p)) <= 1e-8);
    }
}

TEST_CASE("bivariate_normal_rect examples") {
    const Interval neg(-kInf, 0.0), all(-kInf, kInf);
    CHECK(bivariate_normal_rect(neg, neg, 0.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(std::fabs(bivariate_normal_rect(neg, neg, 0.5) - (0.25 + std::asin(0.5) / (2 * std::numbers::pi))) < 1e-12);
    CHECK(std::fabs(bivariate_normal_rect(neg, neg, 0.5) - 0.333333) < 1e-6);
    CHECK(bivariate_normal_rect(all, all, 0.7) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS(bivariate_normal_rect(neg, neg, 1.0));
    CHECK_THROWS(bivariate_normal_rect(neg, neg, -1.2));
}

TEST_CASE("orthant identity over 50 correlations") {
    for (int k = 0; k < 50; ++k) {
        const double rho = -0.98 + k * (1.96 / 49.0);
        const double expected = 0.25 + std::asin(rho) / (2 * std::numbers::pi);
        CHECK(std::fabs(bivariate_normal_rect(Interval(-kInf, 0), Interval(-kInf, 0), rho) - expected) < 1e-8);
    }
}

TEST_CASE("bivariate_normal_rect against Plackett quadrature") {
    Rng rng = Rng::stream(11, "bvn-oracle");
    for (int t = 0; t < 40; ++t) {
        const double h = rng.uniform(-3, 3), k = rng.uniform(-3, 3), rho = rng.uniform(-0.95, 0.95);
        CHECK(std::fabs(bivariate_normal_rect(Interval(-kInf, h), Interval(-kInf, k), rho) -
                        oracle::bvn_lower(h, k, rho)) < 1e-9);
    }
}

TEST_CASE("bivariate_normal_rect keeps relative accuracy for tiny masses") {
    // lower orthant with strong negative correlation: int_{-inf}^h phi(x) Phi((k - rho x) / s) dx
    for (double rho : {-0.924, -0.8, -0.95, -0.99}) {
        for (double h : {-1.85, -2.5}) {
            const double k = -1.3147, s = std::sqrt(1 - rho * rho);
            auto f = [&](double x) { return oracle::phi_pdf(x) * double(oracle::phi_cdf((k - rho * x) / s)); };
            // scaled so the absolute Simpson tolerance acts as a relative one
            const double scale = f(h);
            auto g = [&](double x) { return f(x) / scale; };
            const double exact = scale * oracle::integrate(g, -40.0, h, 1e-12, 30);
            REQUIRE(exact > 0);
            const double got = bivariate_normal_rect(Interval(-kInf, h), Interval(-kInf, k), rho);
            CHECK(std::fabs(got - exact) <= 1e-6 * exact);
        }
    }
}

TEST_CASE("quadrants sum to one and independence factorizes") {
    Rng rng = Rng::stream(3, "bvn-props");
    for (int t = 0; t < 100; ++t) {
        const double h = rng.uniform(-3, 3), k = rng.uniform(-3, 3), rho = rng.uniform(-0.99, 0.99);
        const Interval a1(-kInf, h), a2(h, kInf), b1(-kInf, k), b2(k, kInf);
        const double total = bivariate_normal_rect(a1, b1, rho) + bivariate_normal_rect(a1, b2, rho) +
                             bivariate_normal_rect(a2, b1, rho) + bivariate_normal_rect(a2, b2, rho);
        CHECK(std::fabs(total - 1.0) < 1e-9);

        double l1 = rng.uniform(-3, 2), l2 = rng.uniform(-3, 2);
        const Interval r1(l1, l1 + rng.uniform(0.1, 2)), r2(l2, l2 + rng.uniform(0.1, 2));
        const double prod = std_normal_interval_prob(r1.lower, r1.upper) * std_normal_interval_prob(r2.lower, r2.upper);
        CHECK(std::fabs(bivariate_normal_rect(r1, r2, 0.0) - prod) < 1e-10);
    }
}

TEST_CASE("truncnorm_mean examples") {
    CHECK(std::fabs(truncnorm_mean(Interval(-1, 1), 0, 1)) < 1e-14);
    CHECK(std::fabs(truncnorm_mean(Interval(0, kInf), 0, 1) - std::sqrt(2 / std::numbers::pi)) < 1e-8);
    CHECK(std::fabs(oracle::truncnorm_mean(0, kInf, 0, 1) - 0.797885) < 1e-6);
    CHECK(truncnorm_mean(Interval(-kInf, kInf), 2.5, 3) == doctest::Approx(2.5).epsilon(1e-14));
    CHECK_THROWS_AS(truncnorm_mean(Interval(60, 61), 0, 1), DegenerateIntervalError);
}

TEST_CASE("truncnorm_mean against quadrature") {
    Rng rng = Rng::stream(5, "tn-oracle");
    for (int t = 0; t < 100; ++t) {
        const double mu = rng.uniform(-2, 2), sigma = rng.uniform(0.3, 3);
        double lo = rng.uniform(-4, 4), hi = lo + rng.uniform(0.05, 4);
        if (t % 5 == 0) lo = -kInf;
        if (t % 7 == 0) hi = kInf;
        const double m = truncnorm_mean(Interval(lo, hi), mu, sigma);
        CHECK(std::fabs(m - oracle::truncnorm_mean(lo, hi, mu, sigma)) < 1e-7);
        CHECK(m > lo);
        CHECK(m < hi);
    }
}

TEST_CASE("truncnorm_sample") {
    Rng rng = Rng::stream(17, "tn-sample");
    for (int i = 0; i < 1000; ++i) CHECK(truncnorm_sample(Interval(5, kInf), 0, 1, rng) > 5);
    const Interval iv(0, 1);
    const int n = 100000;
    std::vector<double> draws(n);
    double sum = 0, sq = 0;
    for (double& d : draws) {
        d = truncnorm_sample(iv, 0, 1, rng);
        sum += d;
        sq += d * d;
    }
    const double mean = sum / n, sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::fabs(mean - 0.4598) < 4 * sd / std::sqrt(double(n)));
    CHECK(std::fabs(mean - truncnorm_mean(iv, 0, 1)) < 4 * sd / std::sqrt(double(n)));

    // Kolmogorov-Smirnov against the analytic truncated CDF, alpha = 0.001
    std::sort(draws.begin(), draws.end());
    double dmax = 0;
    for (int i = 0; i < n; ++i) {
        const double f = truncnorm_cdf(draws[i], iv, 0, 1);
        dmax = std::max({dmax, std::fabs(f - double(i) / n), std::fabs(f - double(i + 1) / n)});
    }
    CHECK(dmax < 1.9495 / std::sqrt(double(n)));
}

TEST_CASE("truncnorm_sample extreme tail") {
    Rng rng = Rng::stream(2, "tn-tail");
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double d = truncnorm_sample(Interval(8, kInf), 0, 1, rng);
        REQUIRE(d > 8);
        sum += d;
    }
    CHECK(std::fabs(sum / n - truncnorm_mean(Interval(8, kInf), 0, 1)) < 5e-3);
}

TEST_CASE("cholesky_lower") {
    CHECK((cholesky_lower(SymMatrix::identity(4)) - Matrix::Identity(4, 4)).norm() == 0.0);
    Matrix m(2, 2);
    m << 4, 2, 2, 5;
    Matrix expected(2, 2);
    expected << 2, 0, 1, 2;
    CHECK((cholesky_lower(SymMatrix(m)) - expected).norm() < 1e-14);
    Matrix s(2, 2);
    s << 1, 1, 1, 1;
    CHECK_THROWS_AS(cholesky_lower(SymMatrix(s)), NotPositiveDefiniteError);
}

TEST_CASE("cholesky round-trip on random PD matrices") {
    Rng rng = Rng::stream(23, "chol");
    for (int t = 0; t < 100; ++t) {
        const int d = 1 + static_cast<int>(rng.below(30));
        Matrix a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
        Matrix pd = a * a.transpose() + 0.1 * Matrix::Identity(d, d);
        const Matrix l = cholesky_lower(SymMatrix(pd));
        CHECK((l * l.transpose() - pd).norm() / pd.norm() < 1e-9);
        for (int i = 0; i < d; ++i) {
            CHECK(l(i, i) > 0);
            for (int j = i + 1; j < d; ++j) CHECK(l(i, j) == 0.0);
        }
    }
}

TEST_CASE("sym_eigen") {
    auto e = sym_eigen(SymMatrix::identity(3));
    for (int i = 0; i < 3; ++i) CHECK(e.values(i) == doctest::Approx(1.0));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 3;
    e = sym_eigen(SymMatrix(d));
    CHECK(e.values(0) == doctest::Approx(3.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK(std::fabs(std::fabs(e.vectors(1, 0)) - 1.0) < 1e-12);
    Matrix m(2, 2);
    m << 2, 1, 1, 2;
    e = sym_eigen(SymMatrix(m));
    CHECK(e.values(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(e.values(1) == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng = Rng::stream(4, "eig");
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + static_cast<int>(rng.below(20));
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
        const Matrix s = 0.5 * (a + a.transpose());
        e = sym_eigen(SymMatrix(s));
        const Matrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((rec - s).norm() / s.norm() < 1e-8);
        CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).norm() < 1e-10);
        for (int i = 1; i < n; ++i) CHECK(e.values(i) <= e.values(i - 1));
    }
}

TEST_CASE("boxed_quasi_newton") {
    Objective quad = [](const Vector& x, Vector& g) {
        g(0) = 2 * (x(0) - 3);
        return (x(0) - 3) * (x(0) - 3);
    };
    const Interval free[1] = {Interval(-kInf, kInf)};
    const Interval capped[1] = {Interval(-kInf, 1.0)};
    Vector x0 = Vector::Zero(1);
    auto r = boxed_quasi_newton(quad, x0, free);
    CHECK(r.x(0) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(r.converged);
    r = boxed_quasi_newton(quad, x0, capped);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.value <= 9.0);

    Objective rosen = [](const Vector& x, Vector& g) {
        const double a = 1 - x(0), b = x(1) - x(0) * x(0);
        g(0) = -2 * a - 400 * x(0) * b;
        g(1) = 200 * b;
        return a * a + 100 * b * b;
    };
    Vector start(2);
    start << -1.2, 1.0;
    const Interval box[2] = {Interval(-kInf, kInf), Interval(-kInf, kInf)};
    r = boxed_quasi_newton(rosen, start, box);
    CHECK(std::fabs(r.x(0) - 1) < 1e-4);
    CHECK(std::fabs(r.x(1) - 1) < 1e-4);

    Objective bad = [](const Vector&, Vector&) { return std::nan(""); };
    CHECK_THROWS_AS(boxed_quasi_newton(bad, x0, free), InvalidStartError);
}

}  // TEST_SUITE
