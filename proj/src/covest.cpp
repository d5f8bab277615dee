#include "mixdag/covest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace mixdag {

Matrix fitted_values(const MixedDataset& x, const PreEstimate& pre) {
    return x.values * pre.coefficients;
}

PairLikelihoodInput pair_input(const MixedDataset& x, const PreEstimate& pre, const Matrix& eta, std::size_t a,
                               std::size_t b) {
    PairLikelihoodInput in;
    for (std::size_t j = 0; j < x.p(); ++j) {
        if (x.specs[j].is_discrete()) {
            const auto& t = pre.thresholds[j];
            in.rectangles.emplace_back(level_interval(static_cast<int>(x.values(a, j)), t, eta(a, j)),
                                       level_interval(static_cast<int>(x.values(b, j)), t, eta(b, j)));
        } else {
            in.residuals.emplace_back(x.values(a, j) - eta(a, j), x.values(b, j) - eta(b, j));
        }
    }
    return in;
}

double pair_loglik(const PairLikelihoodInput& input, double rho) {
    double total = 0.0;
    if (!input.residuals.empty()) {
        double sq = 0.0, cross = 0.0;
        for (const auto& [ra, rb] : input.residuals) {
            sq += ra * ra + rb * rb;
            cross += ra * rb;
        }
        const double m = static_cast<double>(input.residuals.size());
        const double one_minus = 1.0 - rho * rho;
        total += -m * (std::log(2.0 * std::numbers::pi) + 0.5 * std::log(one_minus)) -
                 (sq - 2.0 * rho * cross) / (2.0 * one_minus);
    }
    for (const auto& [ia, ib] : input.rectangles) {
        const double prob = bivariate_normal_rect(ia, ib, rho);
        if (!(prob > 1e-300)) return -kInf;
        total += std::log(prob);
    }
    return total;
}

double estimate_rho(const PairLikelihoodInput& input) {
    constexpr int kGrid = 21;
    std::array<double, kGrid> grid{}, value{};
    int best = -1;
    for (int g = 0; g < kGrid; ++g) {
        grid[g] = -kRhoCap + 2.0 * kRhoCap * g / (kGrid - 1);
        value[g] = pair_loglik(input, grid[g]);
        if (std::isfinite(value[g]) && (best < 0 || value[g] > value[best])) best = g;
    }
    if (best < 0) throw EstimationFailedError("pairwise likelihood is -inf on the whole grid");

    double lo = grid[std::max(best - 1, 0)];
    double hi = grid[std::min(best + 1, kGrid - 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double r) {
        const double v = pair_loglik(input, r);
        return std::isfinite(v) ? v : -kInf;
    };
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > 1e-7) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    double rho = 0.5 * (lo + hi);
    double frho = f(rho);
    if (!(frho >= value[best])) {
        rho = grid[best];
        frho = value[best];
    }
    return std::clamp(rho, -kRhoCap, kRhoCap);
}

SymMatrix psd_repair(const SymMatrix& m) {
    constexpr double kMinEig = 1e-8;
    const auto first = sym_eigen(m);
    if (first.values.minCoeff() >= kMinEig) return m;

    const Vector clamped = first.values.cwiseMax(0.0);
    Matrix r = first.vectors * clamped.asDiagonal() * first.vectors.transpose();
    r = 0.5 * (r + r.transpose());
    r.diagonal().setOnes();
    for (int attempt = 0;; ++attempt) {
        if (sym_eigen(SymMatrix(r)).values.minCoeff() >= kMinEig) return SymMatrix(std::move(r));
        if (attempt == 20) break;
        r *= 0.9;
        r.diagonal().setOnes();
    }
    throw RepairFailedError("psd_repair: matrix not positive definite after 20 rescalings");
}

namespace {

template <class PairFn>
BlockCovariance assemble(std::size_t n, const std::vector<std::vector<std::size_t>>& blocks, ThreadPool& pool,
                         CovEstimateReport* report, PairFn&& input_for) {
    struct Task {
        std::size_t block, r, c;
    };
    std::vector<Task> tasks;
    std::vector<Matrix> mats;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const std::size_t m = blocks[b].size();
        mats.push_back(Matrix::Identity(m, m));
        for (std::size_t r = 1; r < m; ++r)
            for (std::size_t c = 0; c < r; ++c) tasks.push_back({b, r, c});
    }
    std::vector<char> failed(tasks.size(), 0);
    pool.parallel_for(tasks.size(), [&](std::size_t k) {
        const Task& t = tasks[k];
        double rho = 0.0;
        try {
            rho = estimate_rho(input_for(blocks[t.block][t.r], blocks[t.block][t.c]));
        } catch (const EstimationFailedError&) {
            failed[k] = 1;
        }
        mats[t.block](t.r, t.c) = rho;
        mats[t.block](t.c, t.r) = rho;
    });

    CovEstimateReport rep;
    rep.pairs = tasks.size();
    for (char f : failed) rep.failed_pairs += f;
    std::vector<CovarianceBlock> out;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        SymMatrix s(std::move(mats[b]));
        SymMatrix repaired = psd_repair(s);
        if (!(repaired.matrix() == s.matrix())) ++rep.repaired_blocks;
        out.push_back({blocks[b], std::move(repaired)});
    }
    if (report) *report = rep;
    return BlockCovariance(n, std::move(out));
}

}  // namespace

BlockCovariance estimate_block_cov(const MixedDataset& x, const PreEstimate& pre,
                                   const std::vector<std::vector<std::size_t>>& blocks, ThreadPool& pool,
                                   CovEstimateReport* report) {
    const Matrix eta = fitted_values(x, pre);
    return assemble(x.n(), blocks, pool, report,
                    [&](std::size_t a, std::size_t b) { return pair_input(x, pre, eta, a, b); });
}

BlockCovariance estimate_block_cov_continuous(const Matrix& features,
                                              const std::vector<std::vector<std::size_t>>& blocks, ThreadPool& pool,
                                              CovEstimateReport* report) {
    return assemble(static_cast<std::size_t>(features.rows()), blocks, pool, report, [&](std::size_t a, std::size_t b) {
        PairLikelihoodInput in;
        in.residuals.reserve(features.cols());
        for (Eigen::Index j = 0; j < features.cols(); ++j) in.residuals.emplace_back(features(a, j), features(b, j));
        return in;
    });
}

}  // namespace mixdag
