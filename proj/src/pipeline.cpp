#include "mixdag/pipeline.hpp"

#include <chrono>

namespace mixdag {

Strategy parse_strategy(const std::string& name) {
    if (name == "baseline") return Strategy::baseline;
    if (name == "average") return Strategy::average;
    if (name == "consensus") return Strategy::consensus;
    if (name == "consensus-ident") return Strategy::consensus_ident;
    throw std::invalid_argument("unknown strategy '" + name + "' (expected baseline, average, consensus or consensus-ident)");
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::baseline: return "baseline";
        case Strategy::average: return "average";
        case Strategy::consensus: return "consensus";
        case Strategy::consensus_ident: return "consensus-ident";
    }
    return "?";
}

namespace {

template <class Fn>
auto stage(PipelineResult& r, const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            r.timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
        } else {
            auto out = fn();
            r.timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
            return out;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const MixedDataset& x, const std::vector<std::vector<std::size_t>>& blocks,
                            const PipelineConfig& config, ThreadPool& pool) {
    PipelineResult r;
    stage(r, "validate", [&] { x.validate(); });
    if (config.strategy == Strategy::baseline) {
        r.graph = stage(r, "baseline", [&] { return baseline_estimate(x, config.learn, pool); });
        return r;
    }
    r.initial_parents = stage(r, "baseline_parents", [&] { return baseline_parents(x, config.learn, pool); });
    r.pre = stage(r, "algorithm1", [&] { return algorithm1(x, r.initial_parents, config.alg1, pool); });
    r.warnings = r.pre.warnings;
    if (config.strategy == Strategy::consensus_ident) {
        r.cov = BlockCovariance::identity(blocks);
    } else {
        r.cov = stage(r, "covariance", [&] { return estimate_block_cov(x, r.pre, blocks, pool, &r.cov_report); });
        if (r.cov_report.failed_pairs)
            r.warnings.push_back(std::to_string(r.cov_report.failed_pairs) + " unit pair(s) failed; correlation set to 0");
    }
    r.latent = stage(r, "algorithm2", [&] { return algorithm2(x, r.pre, r.cov, config.alg2, pool); });
    if (r.latent.pinned)
        r.warnings.push_back(std::to_string(r.latent.pinned) + " Gibbs coordinate(s) pinned to an interval bound");
    std::size_t M = config.M;
    if (r.latent.states.size() < M) {
        r.warnings.push_back("only " + std::to_string(r.latent.states.size()) + " de-correlated state(s); M reduced");
        M = r.latent.states.size();
    }
    const auto z = last_z_tilde(r.latent, M);
    r.graph = stage(r, to_string(config.strategy), [&] {
        return config.strategy == Strategy::average ? average_estimate(z, M, config.learn, pool)
                                                    : consensus_estimate(z, M, config.learn, pool);
    });
    return r;
}

DagModel fit_model(const MixedDataset& x, const Cpdag& graph, const BlockCovariance* cov, ThreadPool& pool) {
    DagModel model;
    model.dag = cpdag_to_dag(graph);
    const ParentSets parents = model.dag.parent_sets();
    const PreEstimate pre = algorithm1(x, parents, {}, pool);
    model.weights = pre.coefficients;
    model.specs = x.specs;
    for (std::size_t j = 0; j < x.p(); ++j)
        if (x.specs[j].is_discrete()) model.specs[j].thresholds = pre.thresholds[j];
    if (cov) {
        const Matrix xt = decorrelate_continuous(x.values, *cov);
        for (std::size_t j = 0; j < x.p(); ++j) {
            if (x.specs[j].is_discrete() || parents[j].empty()) continue;
            const Vector b = least_squares(parent_design(xt, parents[j]), xt.col(j));
            for (std::size_t k = 0; k < parents[j].size(); ++k) model.weights(parents[j][k], j) = b(k);
        }
    }
    return model;
}

}  // namespace mixdag
