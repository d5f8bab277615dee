#include "mixdag/preestimate.hpp"

#include <algorithm>
#include <cmath>

#include "mixdag/normal.hpp"
#include "mixdag/optimize.hpp"

namespace mixdag {

namespace {

std::vector<double> level_counts(const Vector& column, int levels) {
    if (levels < 2) throw std::invalid_argument("level count must be at least 2");
    std::vector<double> counts(levels, 0.0);
    for (Eigen::Index i = 0; i < column.size(); ++i) {
        const double v = column(i);
        const int c = static_cast<int>(v);
        if (v != c || c < 0 || c >= levels)
            throw std::invalid_argument("row " + std::to_string(i) + ": level code " + std::to_string(v) +
                                        " outside [0, " + std::to_string(levels - 1) + "]");
        counts[c] += 1.0;
    }
    return counts;
}

std::vector<double> thresholds_from_counts(const std::vector<double>& counts, double delta_min) {
    double total = 0.0;
    for (double c : counts) total += c;
    std::vector<double> t(counts.size() - 1);
    double cum = 0.0;
    for (std::size_t c = 0; c + 1 < counts.size(); ++c) {
        cum += counts[c];
        t[c] = std_normal_quantile(cum / total);
        if (c > 0) t[c] = std::max(t[c], t[c - 1] + delta_min);
    }
    return t;
}

double safe_truncnorm_mean(const Interval& iv) {
    try {
        return truncnorm_mean(iv, 0.0, 1.0);
    } catch (const DegenerateIntervalError&) {
        return std::isfinite(iv.upper) ? iv.upper : iv.lower;
    }
}

}  // namespace

std::vector<double> initial_thresholds(const Vector& column, int levels, double delta_min) {
    const auto counts = level_counts(column, levels);
    if (column.size() == 0) throw std::invalid_argument("initial_thresholds: empty column");
    if (counts.front() == 0.0) throw DegenerateLevelError(0, "level 0 is empty (cumulative frequency 0)");
    if (counts.back() == 0.0)
        throw DegenerateLevelError(levels - 1, "level " + std::to_string(levels - 1) +
                                                   " is empty (cumulative frequency 1 below it)");
    return thresholds_from_counts(counts, delta_min);
}

std::vector<double> smoothed_thresholds(const Vector& column, int levels, double delta_min) {
    auto counts = level_counts(column, levels);
    for (double& c : counts) c += 0.5;
    return thresholds_from_counts(counts, delta_min);
}

Interval level_interval(int level, const std::vector<double>& t, double eta) {
    const double lo = level == 0 ? -kInf : t[level - 1] - eta;
    const double hi = level == static_cast<int>(t.size()) ? kInf : t[level] - eta;
    return Interval(lo, hi);
}

double discrete_loglik(const Vector& column, const std::vector<double>& t, const Vector& eta) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < column.size(); ++i) {
        const int level = static_cast<int>(column(i));
        const double lo = level == 0 ? -kInf : t[level - 1] - eta(i);
        const double hi = level == static_cast<int>(t.size()) ? kInf : t[level] - eta(i);
        const double lp = std_normal_interval_logprob(lo, hi);
        if (!std::isfinite(lp)) return -kInf;
        total += lp;
    }
    return total;
}

Matrix parent_design(const Matrix& values, const std::vector<std::size_t>& parents) {
    Matrix d(values.rows(), static_cast<Eigen::Index>(parents.size()));
    for (std::size_t k = 0; k < parents.size(); ++k) d.col(k) = values.col(parents[k]);
    return d;
}

Vector least_squares(const Matrix& design, const Vector& y, bool* ridge_used) {
    if (design.cols() == 0) return Vector();
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < design.cols()) {
        if (ridge_used) *ridge_used = true;
        Matrix gram = design.transpose() * design;
        gram.diagonal().array() += 1e-6;
        return gram.ldlt().solve(design.transpose() * y);
    }
    return qr.solve(y);
}

Vector em_beta_step(const MixedDataset& x, std::size_t j, const std::vector<std::size_t>& parents,
                    const std::vector<double>& t, const Vector& beta0, int iters, bool* ridge_used) {
    if (iters <= 0) return beta0;
    if (parents.empty()) return Vector();
    const Matrix d = parent_design(x.values, parents);
    const auto column = x.values.col(j);
    Vector beta = beta0.size() == d.cols() ? beta0 : Vector::Zero(d.cols());
    Vector zhat(d.rows());
    for (int it = 0; it < iters; ++it) {
        const Vector eta = d * beta;
        for (Eigen::Index i = 0; i < d.rows(); ++i)
            zhat(i) = eta(i) + safe_truncnorm_mean(level_interval(static_cast<int>(column(i)), t, eta(i)));
        beta = least_squares(d, zhat, ridge_used);
    }
    return beta;
}

Vector threshold_gradient(const Vector& column, const std::vector<double>& t, const Vector& eta) {
    const int C = static_cast<int>(t.size()) + 1;
    Vector g = Vector::Zero(static_cast<Eigen::Index>(t.size()));
    for (Eigen::Index i = 0; i < column.size(); ++i) {
        const int level = static_cast<int>(column(i));
        const double lo = level == 0 ? -kInf : t[level - 1] - eta(i);
        const double hi = level == C - 1 ? kInf : t[level] - eta(i);
        const double lp = std_normal_interval_logprob(lo, hi);
        if (level < C - 1) g(level) += std::exp(std_normal_logpdf(hi) - lp);
        if (level > 0) g(level - 1) -= std::exp(std_normal_logpdf(lo) - lp);
    }
    return g;
}

std::vector<double> optimize_thresholds(const Vector& column, const Vector& eta, const std::vector<double>& t0,
                                        double delta_min) {
    const std::size_t m = t0.size();
    if (m == 0) return t0;
    for (std::size_t c = 1; c < m; ++c)
        if (!(t0[c] > t0[c - 1])) throw std::invalid_argument("optimize_thresholds: t0 not strictly increasing");

    Vector delta(m);
    std::vector<Interval> bounds(m);
    delta(0) = t0[0];
    for (std::size_t c = 1; c < m; ++c) {
        delta(c) = std::max(t0[c] - t0[c - 1], delta_min);
        bounds[c] = Interval(delta_min, kInf);
    }
    auto to_t = [m](const Vector& d) {
        std::vector<double> t(m);
        double cum = 0.0;
        for (std::size_t c = 0; c < m; ++c) t[c] = cum += d(c);
        return t;
    };
    Objective f = [&](const Vector& d, Vector& grad) {
        const auto t = to_t(d);
        const double ll = discrete_loglik(column, t, eta);
        if (!std::isfinite(ll)) return kInf;
        const Vector g = threshold_gradient(column, t, eta);
        double acc = 0.0;
        for (std::size_t k = m; k-- > 0;) {
            acc += g(k);
            grad(k) = -acc;
        }
        return -ll;
    };
    const auto result = boxed_quasi_newton(f, delta, bounds);
    return to_t(result.x);
}

double optimize_scale(const Vector& column, const std::vector<double>& t, const Vector& eta) {
    const int C = static_cast<int>(t.size()) + 1;
    Objective f = [&](const Vector& sv, Vector& grad) {
        const double sc = sv(0);
        double ll = 0.0, g = 0.0;
        for (Eigen::Index i = 0; i < column.size(); ++i) {
            const int level = static_cast<int>(column(i));
            const double lo = level == 0 ? -kInf : sc * (t[level - 1] - eta(i));
            const double hi = level == C - 1 ? kInf : sc * (t[level] - eta(i));
            const double lp = std_normal_interval_logprob(lo, hi);
            if (!std::isfinite(lp)) return kInf;
            ll += lp;
            if (std::isfinite(hi)) g += std::exp(std_normal_logpdf(hi) - lp) * hi / sc;
            if (std::isfinite(lo)) g -= std::exp(std_normal_logpdf(lo) - lp) * lo / sc;
        }
        grad(0) = -g;
        return -ll;
    };
    Vector s0(1);
    s0(0) = 1.0;
    const Interval box[1] = {Interval(0.2, 5.0)};
    return boxed_quasi_newton(f, s0, box).x(0);
}

PreEstimate algorithm1(const MixedDataset& x, const ParentSets& parents, const Algorithm1Options& options,
                       ThreadPool& pool) {
    const std::size_t p = x.p();
    if (parents.size() != p) throw std::invalid_argument("algorithm1: parent sets do not match column count");
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k : parents[j])
            if (k >= p || k == j) throw std::invalid_argument("algorithm1: invalid parent of node " + std::to_string(j));

    PreEstimate out;
    out.thresholds.assign(p, {});
    out.coefficients = Matrix::Zero(p, p);
    out.parents = parents;
    std::vector<NodeTrace> traces(p);
    std::vector<std::vector<std::string>> warnings(p);
    std::vector<Vector> betas(p);

    pool.parallel_for(p, [&](std::size_t j) {
        const auto& pa = parents[j];
        const Matrix d = parent_design(x.values, pa);
        const Vector column = x.values.col(j);
        if (!x.specs[j].is_discrete()) {
            bool ridge = false;
            betas[j] = least_squares(d, column, &ridge);
            if (ridge) warnings[j].push_back(x.specs[j].name + ": collinear parents, ridge fallback");
            return;
        }
        NodeTrace& tr = traces[j];
        tr.node = j;
        const int levels = x.specs[j].levels;
        std::vector<double> t;
        try {
            t = initial_thresholds(column, levels, options.delta_min);
        } catch (const DegenerateLevelError& e) {
            t = smoothed_thresholds(column, levels, options.delta_min);
            tr.smoothed_start = true;
            warnings[j].push_back(x.specs[j].name + ": " + e.what() + "; thresholds held at smoothed start");
        }
        // Coordinate ascent runs on centered parents; thresholds are shifted back
        // for the trace and the result, so the likelihood values are unchanged.
        const bool center = options.center_parents && d.cols() && !tr.smoothed_start;
        const Vector means = d.cols() ? Vector(d.colwise().mean().transpose()) : Vector();
        Matrix dc = d;
        if (center) dc.rowwise() -= means.transpose();
        const Vector shift_weights = center ? means : Vector::Zero(d.cols());
        auto original = [&](const std::vector<double>& tc, const Vector& b) {
            std::vector<double> t0 = tc;
            const double s = b.size() ? shift_weights.dot(b) : 0.0;
            for (double& v : t0) v += s;
            return t0;
        };
        auto centered = [&](const std::vector<double>& to, const Vector& b) {
            std::vector<double> tc = to;
            const double s = b.size() ? shift_weights.dot(b) : 0.0;
            for (double& v : tc) v -= s;
            return tc;
        };
        MixedDataset xc;
        const MixedDataset* xs = &x;
        if (center) {
            xc.specs = x.specs;
            xc.values = x.values;
            for (std::size_t k : pa) xc.values.col(k).array() -= xc.values.col(k).mean();
            xs = &xc;
        }
        Vector beta = Vector::Zero(d.cols());
        t = centered(t, beta);
        double ll_prev = discrete_loglik(column, t, dc * beta);
        auto dropped = [](double now, double before) {
            return std::isfinite(before) && now < before - 1e-8 * (1.0 + std::fabs(before));
        };
        for (int it = 1; it <= options.max_outer; ++it) {
            bool ridge = false;
            // With thresholds held fixed there is no second block, so the beta step is run to its maximum.
            Vector beta_new = em_beta_step(*xs, j, pa, t, beta, tr.smoothed_start ? 1 : options.inner_em, &ridge);
            for (int extra = 0; tr.smoothed_start && extra < options.fixed_threshold_em_cap; ++extra) {
                Vector next = em_beta_step(*xs, j, pa, t, beta_new, 1, &ridge);
                const double change = (next - beta_new).norm();
                beta_new = std::move(next);
                if (change < 1e-8) break;
            }
            tr.ridge_fallback = tr.ridge_fallback || ridge;
            const Vector eta = dc * beta_new;
            const double ll1 = discrete_loglik(column, t, eta);
            std::vector<double> t_new = tr.smoothed_start ? t : optimize_thresholds(column, eta, t, options.delta_min);
            double ll2 = discrete_loglik(column, t_new, eta);
            if (options.scale_step && !tr.smoothed_start && beta_new.size()) {
                const double sc = optimize_scale(column, t_new, eta);
                std::vector<double> ts = t_new;
                for (double& v : ts) v *= sc;
                const Vector bs = sc * beta_new;
                const double ll3 = discrete_loglik(column, ts, dc * bs);
                if (ll3 > ll2) {
                    t_new = std::move(ts);
                    beta_new = bs;
                    ll2 = ll3;
                }
            }
            if (dropped(ll1, ll_prev)) ++tr.monotonicity_violations;
            if (dropped(ll2, ll1)) ++tr.monotonicity_violations;

            const auto t_old = original(t, beta), t_now = original(t_new, beta_new);
            double dt = 0.0;
            for (std::size_t c = 0; c < t.size(); ++c) dt += (t_now[c] - t_old[c]) * (t_now[c] - t_old[c]);
            TraceStep step;
            step.iteration = it;
            step.d_beta = beta_new.size() ? (beta_new - beta).norm() : 0.0;
            step.d_thresholds = std::sqrt(dt);
            step.loglik_after_beta = ll1;
            step.loglik_after_thresholds = ll2;
            tr.steps.push_back(step);
            beta = std::move(beta_new);
            t = std::move(t_new);
            ll_prev = ll2;
            if (std::max(step.d_beta, step.d_thresholds) < options.tolerance) {
                tr.converged = true;
                break;
            }
        }
        if (tr.ridge_fallback) warnings[j].push_back(x.specs[j].name + ": collinear parents, ridge fallback");
        if (tr.monotonicity_violations)
            warnings[j].push_back(x.specs[j].name + ": observed log-likelihood decreased " +
                                  std::to_string(tr.monotonicity_violations) + " time(s)");
        out.thresholds[j] = original(t, beta);
        betas[j] = std::move(beta);
    });

    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = 0; k < parents[j].size(); ++k) out.coefficients(parents[j][k], j) = betas[j](k);
        if (x.specs[j].is_discrete()) out.trace.push_back(std::move(traces[j]));
        for (auto& w : warnings[j]) out.warnings.push_back(std::move(w));
    }
    return out;
}

ParentSets parents_of(const Dag& g) { return g.parent_sets(); }

ParentSets baseline_parents(const MixedDataset& x, const LearnOptions& options, ThreadPool& pool) {
    const Matrix z = zscore_columns(x.values);
    const Cpdag c = hybrid_learn(z, options.alpha, options.max_condition, pool);
    return parents_of(cpdag_to_dag(c));
}

}  // namespace mixdag
