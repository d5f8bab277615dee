#include "mixdag/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "mixdag/covest.hpp"

namespace mixdag {

namespace {

std::vector<char> expand(const Cpdag& g) {
    const std::size_t p = g.size();
    std::vector<char> e(p * p, 0);
    for (const auto& [a, b] : g.directed_edges()) e[a * p + b] = 1;
    for (const auto& [a, b] : g.undirected_edges()) e[a * p + b] = e[b * p + a] = 1;
    return e;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

F1Score cpdag_f1(const Cpdag& truth, const Cpdag& est) {
    if (truth.size() != est.size())
        throw std::invalid_argument("cpdag_f1: graphs have " + std::to_string(truth.size()) + " and " +
                                    std::to_string(est.size()) + " nodes");
    const auto t = expand(truth), e = expand(est);
    F1Score s;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] && e[k]) ++s.tp;
        else if (e[k]) ++s.fp;
        else if (t[k]) ++s.fn;
    }
    if (s.tp + s.fp) s.precision = double(s.tp) / double(s.tp + s.fp);
    if (s.tp + s.fn) s.recall = double(s.tp) / double(s.tp + s.fn);
    if (s.tp > 0)
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    else if (s.fp == 0 && s.fn == 0)
        s.precision = s.recall = s.f1 = 1.0;
    return s;
}

double cov_rmse(const BlockCovariance& est, const BlockCovariance& truth) {
    if (est.n() != truth.n()) throw std::invalid_argument("cov_rmse: unit counts differ");
    std::vector<std::size_t> block(est.n()), pos(est.n());
    for (std::size_t b = 0; b < est.block_count(); ++b)
        for (std::size_t k = 0; k < est.blocks()[b].units.size(); ++k) {
            block[est.blocks()[b].units[k]] = b;
            pos[est.blocks()[b].units[k]] = k;
        }
    double sq = 0.0;
    std::size_t count = 0;
    for (const auto& tb : truth.blocks())
        for (std::size_t r = 1; r < tb.units.size(); ++r)
            for (std::size_t c = 0; c < r; ++c) {
                const double rho = tb.sigma(r, c);
                if (rho == 0.0) continue;
                const std::size_t u = tb.units[r], v = tb.units[c];
                const double hat = block[u] == block[v] ? est.blocks()[block[u]].sigma(pos[u], pos[v]) : 0.0;
                sq += (hat - rho) * (hat - rho);
                ++count;
            }
    if (count == 0) throw UndefinedMetricError("cov_rmse: truth has no non-zero off-diagonal entries");
    return std::sqrt(sq / double(count));
}

double threshold_rmse(const std::vector<std::vector<double>>& est, const std::vector<std::vector<double>>& truth) {
    if (est.size() != truth.size()) throw std::invalid_argument("threshold_rmse: node counts differ");
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < est.size(); ++j) {
        if (est[j].size() != truth[j].size())
            throw std::invalid_argument("threshold_rmse: threshold count differs at node " + std::to_string(j));
        for (std::size_t c = 0; c < est[j].size(); ++c) {
            sq += (est[j][c] - truth[j][c]) * (est[j][c] - truth[j][c]);
            ++count;
        }
    }
    if (count == 0) throw UndefinedMetricError("threshold_rmse: no thresholds");
    return std::sqrt(sq / double(count));
}

CorrelationSummary correlation_summary(const Matrix& columns, const std::vector<std::vector<std::size_t>>& blocks) {
    if (columns.cols() < 2) throw std::invalid_argument("correlation_summary: at least 2 columns required");
    const Matrix centered = columns.colwise() - columns.rowwise().mean();
    const Vector norms = centered.rowwise().norm();
    CorrelationSummary s;
    for (const auto& units : blocks)
        for (std::size_t a = 0; a < units.size(); ++a)
            for (std::size_t b = a + 1; b < units.size(); ++b) {
                const double d = norms(units[a]) * norms(units[b]);
                s.values.push_back(d > 0 ? centered.row(units[a]).dot(centered.row(units[b])) / d : 0.0);
            }
    if (s.values.empty()) throw UndefinedMetricError("correlation_summary: no block has two units");
    s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / double(s.values.size());
    constexpr int kBins = 40;
    s.counts.assign(kBins, 0);
    for (int k = 0; k < kBins; ++k) s.bin_left.push_back(-1.0 + 0.05 * k);
    for (double v : s.values) {
        const int k = std::clamp(static_cast<int>(std::floor((v + 1.0) / 0.05)), 0, kBins - 1);
        ++s.counts[k];
    }
    return s;
}

double ghk_log_probability(const SymMatrix& sigma, const std::vector<Interval>& box, int replications, Rng& rng,
                           double* standard_error) {
    const Eigen::Index m = sigma.dim();
    if (static_cast<Eigen::Index>(box.size()) != m) throw std::invalid_argument("ghk: one interval per dimension");
    if (replications < 1) throw std::invalid_argument("ghk: replications must be positive");
    const Matrix c = cholesky_lower(sigma);
    std::vector<double> logw(replications, 0.0);
    Vector eta(m);
    for (int r = 0; r < replications; ++r) {
        double lw = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double mu = c.row(i).head(i).dot(eta.head(i));
            const double lo = (box[i].lower - mu) / c(i, i), hi = (box[i].upper - mu) / c(i, i);
            const double lp = std_normal_interval_logprob(lo, hi);
            lw += lp;
            if (!std::isfinite(lp)) break;
            eta(i) = truncnorm_sample(Interval(lo, hi), 0.0, 1.0, rng);
        }
        logw[r] = lw;
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(top)) {
        if (standard_error) *standard_error = 0.0;
        return -kInf;
    }
    double sum = 0.0, sum_sq = 0.0;
    for (double lw : logw) {
        const double w = std::exp(lw - top);
        sum += w;
        sum_sq += w * w;
    }
    const double mean = sum / replications;
    if (standard_error) {
        const double var = replications > 1 ? std::max(sum_sq / replications - mean * mean, 0.0) *
                                                   replications / (replications - 1)
                                             : 0.0;
        *standard_error = std::sqrt(var / replications) / mean;
    }
    return top + std::log(mean);
}

LoglikEstimate test_loglik(const MixedDataset& x_test, const DagModel& model, const BlockCovariance& cov_test,
                           const TestLoglikOptions& options) {
    const std::size_t n = x_test.n(), p = x_test.p();
    if (model.size() != p || model.specs.size() != p) throw std::invalid_argument("test_loglik: model size mismatch");
    if (cov_test.n() != n) throw std::invalid_argument("test_loglik: covariance size mismatch");
    if (n == 0) throw std::invalid_argument("test_loglik: no test units");
    for (std::size_t j = 0; j < p; ++j)
        if (model.specs[j].kind != x_test.specs[j].kind)
            throw std::invalid_argument("test_loglik: variable kind differs for " + x_test.specs[j].name);

    std::vector<Matrix> chol;
    std::vector<double> logdet;
    for (const auto& b : cov_test.blocks()) {
        chol.push_back(cholesky_lower(b.sigma));
        logdet.push_back(2.0 * chol.back().diagonal().array().log().sum());
    }
    const Matrix eta = x_test.values * model.weights;
    double total = 0.0, var = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t b = 0; b < cov_test.block_count(); ++b) {
            const auto& units = cov_test.blocks()[b].units;
            const std::size_t m = units.size();
            if (!model.specs[j].is_discrete()) {
                Vector r(m);
                for (std::size_t i = 0; i < m; ++i) r(i) = x_test.values(units[i], j) - eta(units[i], j);
                const Vector y = chol[b].triangularView<Eigen::Lower>().solve(r);
                total += -0.5 * (double(m) * std::log(2.0 * std::numbers::pi) + logdet[b] + y.squaredNorm());
            } else {
                std::vector<Interval> box;
                for (std::size_t u : units)
                    box.push_back(level_interval(static_cast<int>(x_test.values(u, j)), model.specs[j].thresholds,
                                                 eta(u, j)));
                Rng rng = Rng::stream(options.seed, "ghk", {j, b});
                double se = 0.0;
                total += ghk_log_probability(cov_test.blocks()[b].sigma, box, options.replications, rng, &se);
                var += se * se;
            }
        }
    }
    LoglikEstimate out;
    out.total = total;
    out.value = total / double(n);
    out.standard_error = std::sqrt(var) / double(n);
    return out;
}

std::vector<std::vector<std::size_t>> assign_folds(const std::vector<std::vector<std::size_t>>& blocks,
                                                   std::size_t folds) {
    if (folds == 0) throw std::invalid_argument("assign_folds: fold count must be positive");
    if (blocks.size() < folds)
        throw std::invalid_argument("assign_folds: " + std::to_string(blocks.size()) + " blocks cannot fill " +
                                    std::to_string(folds) + " folds; a fold would have zero blocks");
    std::vector<std::size_t> order(blocks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return blocks[a].size() > blocks[b].size(); });
    std::vector<std::vector<std::size_t>> out(folds);
    for (std::size_t b : order) {
        std::size_t target = 0;
        for (std::size_t k = 1; k < folds; ++k)
            if (out[k].size() < out[target].size()) target = k;
        out[target].insert(out[target].end(), blocks[b].begin(), blocks[b].end());
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

CvResult blocked_cv(const MixedDataset& x, const Matrix& background, const CvConfig& config, ThreadPool& pool) {
    if (config.strategies.empty()) throw std::invalid_argument("blocked_cv: no strategies");
    if (background.cols() > 0 && static_cast<std::size_t>(background.rows()) != x.n())
        throw std::invalid_argument("blocked_cv: background rows do not match units");
    const auto fold_units = assign_folds(x.block_groups(), config.folds);
    CvResult out;
    out.strategies = config.strategies;
    out.folds.resize(config.folds);
    pool.parallel_for(config.folds, [&](std::size_t k) {
        const auto& test_rows = fold_units[k];
        std::vector<char> in_test(x.n(), 0);
        for (std::size_t u : test_rows) in_test[u] = 1;
        std::vector<std::size_t> train_rows;
        for (std::size_t u = 0; u < x.n(); ++u)
            if (!in_test[u]) train_rows.push_back(u);
        const MixedDataset train = x.subset_rows(train_rows);
        const MixedDataset test = x.subset_rows(test_rows);
        const auto test_blocks = test.block_groups();

        BlockCovariance cov_test;
        if (background.cols() > 0) {
            Matrix bg(test_rows.size(), background.cols());
            for (std::size_t i = 0; i < test_rows.size(); ++i) bg.row(i) = background.row(test_rows[i]);
            cov_test = estimate_block_cov_continuous(bg, test_blocks, pool);
        } else {
            cov_test = BlockCovariance::identity(test_blocks);
        }

        CvFold& fold = out.folds[k];
        fold.test_units = test_rows.size();
        for (Strategy s : config.strategies) {
            PipelineConfig pc = config.pipeline;
            pc.strategy = s;
            pc.alg2.seed = Rng::stream(config.pipeline.alg2.seed, "cv-fold", {k}).key();
            const PipelineResult r = run_pipeline(train, train.block_groups(), pc, pool);
            const bool uses_cov = s == Strategy::consensus || s == Strategy::average;
            const DagModel model = fit_model(train, r.graph, uses_cov ? &r.cov : nullptr, pool);
            TestLoglikOptions lo = config.loglik;
            lo.seed = Rng::stream(config.loglik.seed, "cv-loglik", {k}).key();
            const LoglikEstimate ll = test_loglik(test, model, cov_test, lo);
            fold.loglik.push_back(ll.value);
            fold.standard_error.push_back(ll.standard_error);
        }
    });
    for (std::size_t s = 0; s < config.strategies.size(); ++s) {
        std::vector<double> v;
        for (const auto& f : out.folds) v.push_back(f.loglik[s]);
        out.medians.push_back(median_of(v));
    }
    return out;
}

EdgeConfidence edge_confidence(const std::vector<Cpdag>& replicates) {
    if (replicates.empty()) throw std::invalid_argument("edge_confidence: no replicates");
    const std::size_t p = replicates.front().size();
    EdgeConfidence conf(p);
    for (const auto& g : replicates) {
        if (g.size() != p) throw std::invalid_argument("edge_confidence: node counts differ");
        for (const auto& [a, b] : g.directed_edges()) conf.at(a, b) += 1.0;
        for (const auto& [a, b] : g.undirected_edges()) {
            conf.at(a, b) += 0.5;
            conf.at(b, a) += 0.5;
        }
    }
    const double B = double(replicates.size());
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b) conf.at(a, b) /= B;
    return conf;
}

Cpdag confident_graph(const Cpdag& full, const EdgeConfidence& conf) {
    if (full.size() != conf.size()) throw std::invalid_argument("confident_graph: size mismatch");
    Cpdag out(full.size());
    for (const auto& [a, b] : full.directed_edges())
        if (conf.directed(a, b) >= 0.5) out.set_directed(a, b);
    for (const auto& [a, b] : full.undirected_edges()) {
        if (conf.undirected(a, b) < 0.5) continue;
        const double ab = conf.directed(a, b), ba = conf.directed(b, a);
        if (ab >= 3.0 * ba)
            out.set_directed(a, b);
        else if (ba >= 3.0 * ab)
            out.set_directed(b, a);
        else
            out.set_undirected(a, b);
    }
    return out;
}

BootstrapResult bootstrap_confidence(const MixedDataset& x, const BootstrapConfig& config, ThreadPool& pool,
                                     const Cpdag* full) {
    if (config.replicates < 1) throw std::invalid_argument("bootstrap: at least one replicate required");
    if (!(config.fraction > 0.0 && config.fraction <= 1.0)) throw std::invalid_argument("bootstrap: fraction must lie in (0, 1]");
    BootstrapResult out;
    out.full = full ? *full : run_pipeline(x, x.block_groups(), config.pipeline, pool).graph;
    const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(config.fraction * double(x.n()))));
    std::vector<std::optional<Cpdag>> graphs(config.replicates);
    pool.parallel_for(config.replicates, [&](std::size_t t) {
        Rng rng = Rng::stream(config.seed, "bootstrap", {t});
        std::vector<std::size_t> rows(m);
        for (auto& r : rows) r = rng.below(x.n());
        std::sort(rows.begin(), rows.end());
        const MixedDataset sub = x.subset_rows(rows);
        PipelineConfig pc = config.pipeline;
        pc.alg2.seed = rng.child("pipeline").key();
        try {
            graphs[t] = run_pipeline(sub, sub.block_groups(), pc, pool).graph;
        } catch (const std::exception&) {
        }
    });
    std::vector<Cpdag> ok;
    for (auto& g : graphs)
        if (g) ok.push_back(std::move(*g));
    out.effective = ok.size();
    out.failed = config.replicates - ok.size();
    if (ok.empty()) throw std::runtime_error("bootstrap: every replicate failed");
    out.confidence = edge_confidence(ok);
    out.final_graph = confident_graph(out.full, out.confidence);
    return out;
}

}  // namespace mixdag
