#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mixdag/parallel.hpp"

namespace mixdag {

struct StudyCheck {
    int criterion = 0;
    std::string metric;
    double value = 0.0;
    std::string requirement;  // human-readable tolerance
    bool pass = false;
};

struct StudyReport {
    std::string study;
    std::vector<StudyCheck> checks;
    /// (file name, TSV body) pairs.
    std::vector<std::pair<std::string, std::string>> tables;
    double seconds = 0.0;
    double time_limit = 0.0;

    bool passed() const;
};

struct StudyOptions {
    std::uint64_t seed = 1;
    std::size_t replicates = 10;
};

/// Within-block unit correlations of continuous columns before and after de-correlation.
StudyReport study_fig4_desk(const StudyOptions& options, ThreadPool& pool = serial_pool());
/// CPDAG F1 of baseline, average and consensus for the PC and hybrid learners.
StudyReport study_fig3_desk(const StudyOptions& options, ThreadPool& pool = serial_pool());
/// Covariance RMSE at p = 100 and 500 with oracle and estimated parents.
StudyReport study_cov_desk(const StudyOptions& options, ThreadPool& pool = serial_pool());
/// Algorithm 1 convergence trace at n = 100, p = 50.
StudyReport study_alg1_desk(const StudyOptions& options, ThreadPool& pool = serial_pool());
/// Blocked 10-fold cross-validation of baseline, consensus-ident and consensus.
StudyReport study_cv_desk(const StudyOptions& options, ThreadPool& pool = serial_pool());

const std::vector<std::string>& study_names();
/// Throws std::invalid_argument for an unknown name.
StudyReport run_study(const std::string& name, const StudyOptions& options, ThreadPool& pool = serial_pool());

/// report.tsv (criterion, metric, value, requirement, pass) plus the study's tables.
void write_study(const std::string& dir, const StudyReport& report);
std::string format_checks(const StudyReport& report);

}  // namespace mixdag
