#include "mixdag/decorrelate.hpp"

#include <cmath>
#include <stdexcept>

namespace mixdag {

namespace {

double start_value(const Interval& iv) {
    try {
        return truncnorm_mean(iv, 0.0, 1.0);
    } catch (const DegenerateIntervalError&) {
        return std::isfinite(iv.upper) ? iv.upper : std::nextafter(iv.lower, kInf);
    }
}

Matrix precision_of(const SymMatrix& sigma) {
    Matrix theta = spd_inverse(sigma);
    return 0.5 * (theta + theta.transpose());
}

std::vector<Matrix> transposed_factors(const BlockCovariance& cov) {
    std::vector<Matrix> out;
    out.reserve(cov.block_count());
    for (const auto& b : cov.blocks()) out.push_back(cholesky_lower(SymMatrix(precision_of(b.sigma))).transpose());
    return out;
}

Matrix apply_factors(const Matrix& columns, const BlockCovariance& cov, const std::vector<Matrix>& lt) {
    Matrix out(columns.rows(), columns.cols());
    for (std::size_t b = 0; b < cov.block_count(); ++b) {
        const auto& units = cov.blocks()[b].units;
        Matrix rows(units.size(), columns.cols());
        for (std::size_t i = 0; i < units.size(); ++i) rows.row(i) = columns.row(units[i]);
        const Matrix mapped = lt[b] * rows;
        for (std::size_t i = 0; i < units.size(); ++i) out.row(units[i]) = mapped.row(i);
    }
    return out;
}

}  // namespace

GibbsResult gibbs_truncated_block(const SymMatrix& sigma, const std::vector<Interval>& intervals, Rng& rng,
                                  int burn_in, int draws, const Vector& start) {
    const Eigen::Index m = sigma.dim();
    if (static_cast<Eigen::Index>(intervals.size()) != m)
        throw std::invalid_argument("gibbs_truncated_block: one interval per unit required");
    if (burn_in < 0 || draws < 1) throw std::invalid_argument("gibbs_truncated_block: invalid chain length");
    const Matrix theta = precision_of(sigma);

    GibbsResult out;
    Vector x(m);
    for (Eigen::Index i = 0; i < m; ++i)
        x(i) = start.size() == m && intervals[i].contains(start(i)) ? start(i) : start_value(intervals[i]);

    out.draws.resize(draws, m);
    for (int sweep = 0; sweep < burn_in + draws; ++sweep) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const double tii = theta(i, i);
            const double mu = -(theta.row(i).dot(x) - tii * x(i)) / tii;
            const double sd = 1.0 / std::sqrt(tii);
            try {
                x(i) = truncnorm_sample(intervals[i], mu, sd, rng);
            } catch (const DegenerateIntervalError&) {
                const Interval& iv = intervals[i];
                x(i) = (mu > iv.upper || !std::isfinite(iv.lower)) ? iv.upper : std::nextafter(iv.lower, kInf);
                ++out.pinned;
            }
        }
        if (sweep >= burn_in) out.draws.row(sweep - burn_in) = x;
    }
    out.last = x;
    return out;
}

Matrix decorrelate_continuous(const Matrix& columns, const BlockCovariance& cov) {
    if (static_cast<std::size_t>(columns.rows()) != cov.n())
        throw std::invalid_argument("decorrelate_continuous: row count does not match covariance");
    return apply_factors(columns, cov, transposed_factors(cov));
}

Vector impute_errors(const MixedDataset& x, const std::vector<double>& thresholds, const BlockCovariance& cov,
                     const Vector& eta, std::size_t j, int iteration, const Algorithm2Config& config,
                     std::vector<Vector>& warm, std::size_t* pinned, ThreadPool& pool) {
    const auto& blocks = cov.blocks();
    warm.resize(blocks.size());
    Vector eps(x.n());
    std::vector<std::size_t> pins(blocks.size(), 0);
    pool.parallel_for(blocks.size(), [&](std::size_t b) {
        const auto& units = blocks[b].units;
        std::vector<Interval> iv;
        iv.reserve(units.size());
        for (std::size_t u : units) iv.push_back(level_interval(static_cast<int>(x.values(u, j)), thresholds, eta(u)));
        Rng rng = Rng::stream(config.seed, "gibbs", {b, j, static_cast<std::uint64_t>(iteration)});
        GibbsResult g = gibbs_truncated_block(blocks[b].sigma, iv, rng, config.burn_in, config.draws, warm[b]);
        const Vector mean = g.draws.colwise().mean().transpose();
        for (std::size_t i = 0; i < units.size(); ++i) eps(units[i]) = mean(i);
        warm[b] = std::move(g.last);
        pins[b] = g.pinned;
    });
    if (pinned)
        for (std::size_t v : pins) *pinned += v;
    return eps;
}

Algorithm2Result algorithm2(const MixedDataset& x, const PreEstimate& pre, const BlockCovariance& cov,
                            const Algorithm2Config& config, ThreadPool& pool) {
    const std::size_t n = x.n(), p = x.p();
    if (cov.n() != n) throw std::invalid_argument("algorithm2: covariance covers " + std::to_string(cov.n()) +
                                                  " units, data has " + std::to_string(n));
    if (static_cast<std::size_t>(pre.coefficients.rows()) != p ||
        static_cast<std::size_t>(pre.coefficients.cols()) != p || pre.thresholds.size() != p ||
        pre.parents.size() != p)
        throw std::invalid_argument("algorithm2: pre-estimate does not match the data dimensions");
    if (config.iterations < 1 || config.draws < 1 || config.burn_in < 0)
        throw std::invalid_argument("algorithm2: iterations and draws must be positive");
    const auto discrete = x.discrete_indices();
    for (std::size_t j : discrete)
        if (pre.thresholds[j].size() + 1 != static_cast<std::size_t>(x.specs[j].levels))
            throw std::invalid_argument("algorithm2: thresholds missing for " + x.specs[j].name);

    const auto lt = transposed_factors(cov);
    const Matrix x_tilde = apply_factors(x.values, cov, lt);

    Algorithm2Result out;
    Matrix beta = pre.coefficients;
    if (discrete.empty()) {
        LatentState s;
        s.eps = Matrix(n, 0);
        s.z_hat = x.values;
        s.z_tilde = x_tilde;
        s.beta = beta;
        out.states.push_back(std::move(s));
        return out;
    }

    std::vector<std::vector<Vector>> warm(discrete.size());
    std::vector<std::size_t> pins(discrete.size(), 0);
    for (int t = 1; t <= config.iterations; ++t) {
        LatentState s;
        s.iteration = t;
        s.beta = beta;
        s.eps.resize(n, discrete.size());
        const Matrix eta = x.values * beta;
        pool.parallel_for(discrete.size(), [&](std::size_t d) {
            const std::size_t j = discrete[d];
            s.eps.col(d) = impute_errors(x, pre.thresholds[j], cov, eta.col(j), j, t, config, warm[d], &pins[d], pool);
        });
        s.z_hat = x.values;
        for (std::size_t d = 0; d < discrete.size(); ++d)
            s.z_hat.col(discrete[d]) = eta.col(discrete[d]) + s.eps.col(d);
        s.z_tilde = apply_factors(s.z_hat, cov, lt);

        pool.parallel_for(discrete.size(), [&](std::size_t d) {
            const std::size_t j = discrete[d];
            const auto& pa = pre.parents[j];
            if (pa.empty()) return;
            const Matrix design = parent_design(x_tilde, pa);
            Matrix gram = design.transpose() * design;
            for (Eigen::Index k = 0; k < design.cols(); ++k) {
                const double mean = design.col(k).mean();
                const double var = (design.col(k).array() - mean).square().mean();
                gram(k, k) += std::max(config.ridge * static_cast<double>(n) * var, 1e-6);
            }
            const Vector b = gram.ldlt().solve(design.transpose() * s.z_tilde.col(j));
            for (std::size_t k = 0; k < pa.size(); ++k) beta(pa[k], j) = b(k);
        });
        out.states.push_back(std::move(s));
    }
    for (std::size_t v : pins) out.pinned += v;
    return out;
}

std::vector<Matrix> last_z_tilde(const Algorithm2Result& result, std::size_t M) {
    if (M == 0 || result.states.size() < M)
        throw std::invalid_argument("need at least " + std::to_string(M) + " de-correlated states, have " +
                                    std::to_string(result.states.size()));
    std::vector<Matrix> out;
    for (std::size_t k = result.states.size() - M; k < result.states.size(); ++k)
        out.push_back(result.states[k].z_tilde);
    return out;
}

}  // namespace mixdag
