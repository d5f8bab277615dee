#include "mixdag/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mixdag/covest.hpp"
#include "mixdag/decorrelate.hpp"
#include "mixdag/evaluate.hpp"
#include "mixdag/io.hpp"
#include "mixdag/learn.hpp"
#include "mixdag/preestimate.hpp"
#include "mixdag/simulate.hpp"

namespace mixdag {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g(double v) { return format_double(v); }

StudyCheck check(int criterion, std::string metric, double value, std::string requirement, bool pass) {
    return {criterion, std::move(metric), value, std::move(requirement), pass};
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Matrix columns_of(const Matrix& m, const std::vector<std::size_t>& cols) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
    return out;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t r) { return seed + r; }

void finish(StudyReport& report, Clock::time_point t0, int criterion) {
    report.seconds = since(t0);
    report.checks.push_back(check(criterion, "runtime_seconds", report.seconds,
                                  "<= " + g(report.time_limit), report.seconds <= report.time_limit));
}

}  // namespace

bool StudyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const StudyCheck& c) { return c.pass; });
}

StudyReport study_fig4_desk(const StudyOptions& options, ThreadPool& pool) {
    const auto t0 = Clock::now();
    StudyReport report;
    report.study = "fig4-desk";
    report.time_limit = 300.0;

    SimulationConfig sc;
    sc.seed = options.seed;
    const Simulation sim = simulate(sc);
    const auto groups = sim.data.block_groups();
    PipelineConfig pc;
    pc.alg2.seed = options.seed;
    const ParentSets parents = baseline_parents(sim.data, pc.learn, pool);
    const PreEstimate pre = algorithm1(sim.data, parents, pc.alg1, pool);
    const BlockCovariance cov = estimate_block_cov(sim.data, pre, groups, pool);
    const Algorithm2Result latent = algorithm2(sim.data, pre, cov, pc.alg2, pool);

    const auto cont = sim.data.continuous_indices();
    const CorrelationSummary before = correlation_summary(columns_of(sim.data.values, cont), groups);
    const CorrelationSummary after = correlation_summary(columns_of(latent.states.back().z_tilde, cont), groups);

    report.checks.push_back(check(1, "mean_within_block_correlation_before", before.mean, ">= 0.4", before.mean >= 0.4));
    report.checks.push_back(check(1, "mean_within_block_correlation_after", after.mean, "<= 0.15", after.mean <= 0.15));

    std::ostringstream hist;
    hist << "bin_left\tbefore\tafter\n";
    for (std::size_t b = 0; b < before.bin_left.size(); ++b)
        hist << g(before.bin_left[b]) << '\t' << before.counts[b] << '\t' << after.counts[b] << '\n';
    report.tables.emplace_back("fig4_histogram.tsv", hist.str());
    std::ostringstream summary;
    summary << "stage\tmean\tpairs\n"
            << "before\t" << g(before.mean) << '\t' << before.values.size() << '\n'
            << "after\t" << g(after.mean) << '\t' << after.values.size() << '\n';
    report.tables.emplace_back("fig4_summary.tsv", summary.str());
    finish(report, t0, 1);
    return report;
}

StudyReport study_fig3_desk(const StudyOptions& options, ThreadPool& pool) {
    const auto t0 = Clock::now();
    StudyReport report;
    report.study = "fig3-desk";
    report.time_limit = 1800.0;

    const LearnerKind learners[2] = {LearnerKind::pc, LearnerKind::hybrid};
    std::vector<double> f1[2][3];
    std::ostringstream table;
    table << "seed\tlearner\tbaseline\taverage\tconsensus\n";
    for (std::size_t r = 0; r < options.replicates; ++r) {
        SimulationConfig sc;
        sc.seed = replicate_seed(options.seed, r);
        const Simulation sim = simulate(sc);
        const Cpdag truth = dag_to_cpdag(sim.model.dag);
        PipelineConfig pc;
        pc.alg2.seed = sc.seed;
        const ParentSets parents = baseline_parents(sim.data, pc.learn, pool);
        const PreEstimate pre = algorithm1(sim.data, parents, pc.alg1, pool);
        const BlockCovariance cov = estimate_block_cov(sim.data, pre, sim.data.block_groups(), pool);
        const Algorithm2Result latent = algorithm2(sim.data, pre, cov, pc.alg2, pool);
        const std::size_t M = std::min<std::size_t>(pc.M, latent.states.size());
        const auto z = last_z_tilde(latent, M);
        for (int l = 0; l < 2; ++l) {
            LearnOptions lo = pc.learn;
            lo.learner = learners[l];
            const double b = cpdag_f1(truth, baseline_estimate(sim.data, lo, pool)).f1;
            const double a = cpdag_f1(truth, average_estimate(z, M, lo, pool)).f1;
            const double c = cpdag_f1(truth, consensus_estimate(z, M, lo, pool)).f1;
            f1[l][0].push_back(b);
            f1[l][1].push_back(a);
            f1[l][2].push_back(c);
            table << sc.seed << '\t' << to_string(learners[l]) << '\t' << g(b) << '\t' << g(a) << '\t' << g(c) << '\n';
        }
    }
    for (int l = 0; l < 2; ++l) {
        const std::string name = to_string(learners[l]);
        report.checks.push_back(check(2, name + "_mean_f1_baseline", mean(f1[l][0]), "reported", true));
        report.checks.push_back(check(2, name + "_mean_f1_average", mean(f1[l][1]), "reported", true));
        report.checks.push_back(check(2, name + "_mean_f1_consensus", mean(f1[l][2]), "reported", true));
        const double gap = mean(f1[l][2]) - mean(f1[l][0]);
        report.checks.push_back(check(2, name + "_consensus_minus_baseline", gap, ">= 0.05", gap >= 0.05));
    }
    report.tables.emplace_back("fig3_f1.tsv", table.str());
    finish(report, t0, 2);
    return report;
}

StudyReport study_cov_desk(const StudyOptions& options, ThreadPool& pool) {
    const auto t0 = Clock::now();
    StudyReport report;
    report.study = "cov-desk";
    report.time_limit = 1200.0;

    const std::size_t ps[2] = {100, 500};
    std::vector<double> oracle[2], estimated[2];
    std::ostringstream table;
    table << "p\tseed\toracle_parents\testimated_parents\n";
    for (int k = 0; k < 2; ++k)
        for (std::size_t r = 0; r < options.replicates; ++r) {
            SimulationConfig sc;
            sc.seed = replicate_seed(options.seed, r);
            sc.p = ps[k];
            sc.edges = 2 * ps[k];
            const Simulation sim = simulate(sc);
            const auto groups = sim.data.block_groups();
            const Algorithm1Options a1;
            const PreEstimate po = algorithm1(sim.data, sim.model.dag.parent_sets(), a1, pool);
            const double ro = cov_rmse(estimate_block_cov(sim.data, po, groups, pool), sim.cov.cov);
            const PreEstimate pe = algorithm1(sim.data, baseline_parents(sim.data, {}, pool), a1, pool);
            const double re = cov_rmse(estimate_block_cov(sim.data, pe, groups, pool), sim.cov.cov);
            oracle[k].push_back(ro);
            estimated[k].push_back(re);
            table << ps[k] << '\t' << sc.seed << '\t' << g(ro) << '\t' << g(re) << '\n';
        }
    const double o100 = mean(oracle[0]), o500 = mean(oracle[1]);
    const double e100 = mean(estimated[0]), e500 = mean(estimated[1]);
    report.checks.push_back(check(3, "oracle_rmse_p100_minus_p500", o100 - o500, "> 0", o100 > o500));
    report.checks.push_back(check(3, "estimated_rmse_p100_minus_p500", e100 - e500, "> 0", e100 > e500));
    const double gap = std::max(std::fabs(e100 - o100), std::fabs(e500 - o500));
    report.checks.push_back(check(3, "max_abs_estimated_minus_oracle", gap, "<= 0.05", gap <= 0.05));
    std::ostringstream summary;
    summary << "p\toracle_parents\testimated_parents\n"
            << "100\t" << g(o100) << '\t' << g(e100) << '\n'
            << "500\t" << g(o500) << '\t' << g(e500) << '\n';
    report.tables.emplace_back("cov_rmse.tsv", table.str());
    report.tables.emplace_back("cov_rmse_summary.tsv", summary.str());
    finish(report, t0, 3);
    return report;
}

StudyReport study_alg1_desk(const StudyOptions& options, ThreadPool& pool) {
    const auto t0 = Clock::now();
    StudyReport report;
    report.study = "alg1-desk";
    report.time_limit = 120.0;

    SimulationConfig sc;
    sc.seed = options.seed;
    sc.p = 50;
    sc.edges = 100;
    const Simulation sim = simulate(sc);
    const PreEstimate pre = algorithm1(sim.data, sim.model.dag.parent_sets(), {}, pool);

    std::ostringstream table;
    table << "node\titeration\td_beta\td_thresholds\tloglik_after_beta\tloglik_after_thresholds\n";
    int worst = 0;
    std::size_t unconverged = 0;
    int violations = 0;
    for (const auto& tr : pre.trace) {
        int reached = 0;
        for (const auto& s : tr.steps) {
            table << sim.data.specs[tr.node].name << '\t' << s.iteration << '\t' << g(s.d_beta) << '\t'
                  << g(s.d_thresholds) << '\t' << g(s.loglik_after_beta) << '\t' << g(s.loglik_after_thresholds)
                  << '\n';
            if (!reached && std::max(s.d_beta, s.d_thresholds) < 1e-3) reached = s.iteration;
        }
        if (!reached || reached > 10) ++unconverged;
        worst = std::max(worst, reached ? reached : static_cast<int>(tr.steps.size()) + 1);
        violations += tr.monotonicity_violations;
    }
    report.checks.push_back(check(4, "discrete_nodes", static_cast<double>(pre.trace.size()), "reported", true));
    report.checks.push_back(check(4, "nodes_not_below_1e-3_by_iteration_10", static_cast<double>(unconverged), "== 0",
                                  unconverged == 0));
    report.checks.push_back(check(4, "slowest_iteration_reaching_1e-3", worst, "<= 10", worst <= 10));
    report.checks.push_back(check(4, "likelihood_decreases", violations, "== 0", violations == 0));
    report.tables.emplace_back("alg1_trace.tsv", table.str());
    finish(report, t0, 4);
    return report;
}

StudyReport study_cv_desk(const StudyOptions& options, ThreadPool& pool) {
    const auto t0 = Clock::now();
    StudyReport report;
    report.study = "cv-desk";
    report.time_limit = 1800.0;

    SimulationConfig sc;
    sc.seed = options.seed;
    sc.n = 150;
    sc.p = 50;
    sc.edges = 100;
    sc.background = 50;
    const Simulation sim = simulate(sc);
    CvConfig cv;
    cv.pipeline.alg2.seed = options.seed;
    cv.loglik.seed = options.seed;
    const CvResult r = blocked_cv(sim.data, sim.background, cv, pool);

    std::ostringstream table;
    table << "fold\ttest_units";
    for (Strategy s : r.strategies) table << '\t' << to_string(s) << '\t' << to_string(s) << "_se";
    table << '\n';
    for (std::size_t k = 0; k < r.folds.size(); ++k) {
        table << k << '\t' << r.folds[k].test_units;
        for (std::size_t s = 0; s < r.strategies.size(); ++s)
            table << '\t' << g(r.folds[k].loglik[s]) << '\t' << g(r.folds[k].standard_error[s]);
        table << '\n';
    }
    report.tables.emplace_back("cv_folds.tsv", table.str());
    auto median_of = [&](Strategy s) {
        const auto it = std::find(r.strategies.begin(), r.strategies.end(), s);
        return r.medians[static_cast<std::size_t>(it - r.strategies.begin())];
    };
    const double base = median_of(Strategy::baseline);
    const double ident = median_of(Strategy::consensus_ident);
    const double cons = median_of(Strategy::consensus);
    report.checks.push_back(check(5, "median_loglik_baseline", base, "reported", true));
    report.checks.push_back(check(5, "median_loglik_consensus_ident", ident, "reported", true));
    report.checks.push_back(check(5, "median_loglik_consensus", cons, "reported", true));
    report.checks.push_back(check(5, "consensus_minus_consensus_ident", cons - ident, "> 0", cons > ident));
    report.checks.push_back(check(5, "consensus_minus_baseline", cons - base, "> 0", cons > base));
    finish(report, t0, 5);
    return report;
}

const std::vector<std::string>& study_names() {
    static const std::vector<std::string> names{"fig3-desk", "fig4-desk", "cv-desk", "cov-desk", "alg1-desk"};
    return names;
}

StudyReport run_study(const std::string& name, const StudyOptions& options, ThreadPool& pool) {
    if (name == "fig3-desk") return study_fig3_desk(options, pool);
    if (name == "fig4-desk") return study_fig4_desk(options, pool);
    if (name == "cv-desk") return study_cv_desk(options, pool);
    if (name == "cov-desk") return study_cov_desk(options, pool);
    if (name == "alg1-desk") return study_alg1_desk(options, pool);
    throw std::invalid_argument("unknown study '" + name + "'");
}

std::string format_checks(const StudyReport& report) {
    std::ostringstream out;
    out << "criterion\tmetric\tvalue\trequirement\tpass\n";
    for (const auto& c : report.checks)
        out << c.criterion << '\t' << c.metric << '\t' << g(c.value) << '\t' << c.requirement << '\t'
            << (c.pass ? "PASS" : "FAIL") << '\n';
    return out.str();
}

void write_study(const std::string& dir, const StudyReport& report) {
    ensure_directory(dir);
    const std::filesystem::path base(dir);
    {
        std::ofstream out(base / (report.study + "_report.tsv"));
        out << format_checks(report);
    }
    for (const auto& [file, body] : report.tables) {
        std::ofstream out(base / file);
        out << body;
    }
}

}  // namespace mixdag
