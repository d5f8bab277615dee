#include "mixdag/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mixdag/io.hpp"
#include "mixdag/normal.hpp"

namespace mixdag {

namespace {

constexpr double kMinVariance = 1e-8;

double normal_logpdf(double x, double mean, double var) {
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + (x - mean) * (x - mean) / var);
}

double log_sum_exp(const double* v, int k) {
    double top = v[0];
    for (int i = 1; i < k; ++i) top = std::max(top, v[i]);
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += std::exp(v[i] - top);
    return top + std::log(s);
}

GmmFit single_gaussian(const std::vector<double>& x) {
    const double n = double(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    if (var < kMinVariance) throw GmmFitError("fit_gmm: column is (nearly) constant");
    GmmFit f;
    f.weights = {1.0};
    f.means = {mean};
    f.variances = {var};
    f.loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * var) + 1.0);
    return f;
}

bool em_run(const std::vector<double>& x, GmmFit& f) {
    const int K = static_cast<int>(f.means.size());
    const std::size_t n = x.size();
    std::vector<double> resp(n * K);
    double prev = -kInf;
    for (int it = 0; it < 500; ++it) {
        double ll = 0.0;
        std::vector<double> lp(K);
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < K; ++k) lp[k] = std::log(f.weights[k]) + normal_logpdf(x[i], f.means[k], f.variances[k]);
            const double lse = log_sum_exp(lp.data(), K);
            ll += lse;
            for (int k = 0; k < K; ++k) resp[i * K + k] = std::exp(lp[k] - lse);
        }
        if (std::isfinite(prev) && ll < prev - 1e-9 * (1.0 + std::fabs(prev))) ++f.decreases;
        f.loglik = ll;
        f.iterations = it + 1;
        if (std::isfinite(prev) && std::fabs(ll - prev) < 1e-6) return true;
        prev = ll;
        for (int k = 0; k < K; ++k) {
            double nk = 0.0, sx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * K + k];
                sx += resp[i * K + k] * x[i];
            }
            if (nk <= 0.0) return false;
            const double mean = sx / nk;
            double sv = 0.0;
            for (std::size_t i = 0; i < n; ++i) sv += resp[i * K + k] * (x[i] - mean) * (x[i] - mean);
            f.weights[k] = nk / double(n);
            f.means[k] = mean;
            f.variances[k] = sv / nk;
            if (f.variances[k] < kMinVariance) return false;
        }
    }
    return true;
}

GmmFit kmeanspp_start(const std::vector<double>& x, int K, Rng& rng) {
    const std::size_t n = x.size();
    std::vector<double> centers{x[rng.below(n)]};
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < K) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = kInf;
            for (double c : centers) best = std::min(best, (x[i] - c) * (x[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(x[rng.below(n)]);
            continue;
        }
        double u = rng.uniform() * total;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            u -= d2[i];
            if (u <= 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(x[pick]);
    }
    std::vector<double> cnt(K, 0.0), sum(K, 0.0), sq(K, 0.0);
    for (double v : x) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (std::fabs(v - centers[k]) < std::fabs(v - centers[best])) best = k;
        cnt[best] += 1.0;
        sum[best] += v;
        sq[best] += v * v;
    }
    const double mean_all = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double var_all = 0.0;
    for (double v : x) var_all += (v - mean_all) * (v - mean_all);
    var_all /= double(n);
    GmmFit f;
    for (int k = 0; k < K; ++k) {
        const double w = std::max(cnt[k], 1.0) / double(n);
        const double m = cnt[k] > 0 ? sum[k] / cnt[k] : centers[k];
        double v = cnt[k] > 1 ? sq[k] / cnt[k] - m * m : var_all;
        if (!(v > kMinVariance)) v = std::max(var_all, kMinVariance) / K;
        f.weights.push_back(w);
        f.means.push_back(m);
        f.variances.push_back(v);
    }
    const double wsum = std::accumulate(f.weights.begin(), f.weights.end(), 0.0);
    for (double& w : f.weights) w /= wsum;
    return f;
}

double poly(const double* cc, int nord, double x) {
    double ret = cc[0];
    if (nord > 1) {
        double p = x * cc[nord - 1];
        for (int j = nord - 2; j > 0; --j) p = (p + cc[j]) * x;
        ret += p;
    }
    return ret;
}

}  // namespace

GmmFit fit_gmm(const std::vector<double>& column, int K, Rng& rng) {
    if (K < 1 || K > 3) throw std::invalid_argument("fit_gmm: K must be 1, 2 or 3");
    if (column.size() < static_cast<std::size_t>(10 * K))
        throw std::invalid_argument("fit_gmm: at least " + std::to_string(10 * K) + " values required");
    if (K == 1) return single_gaussian(column);
    single_gaussian(column);  // rejects constant columns

    GmmFit best;
    bool have = false;
    for (int r = 0; r < 5; ++r) {
        Rng restart = rng.child("gmm-restart", {static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(r)});
        GmmFit f = kmeanspp_start(column, K, restart);
        if (!em_run(column, f)) continue;
        if (!have || f.loglik > best.loglik) {
            best = f;
            have = true;
        }
    }
    if (!have) throw GmmFitError("fit_gmm: every restart collapsed a component");
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return best.means[a] < best.means[b]; });
    GmmFit sorted = best;
    for (int k = 0; k < K; ++k) {
        sorted.weights[k] = best.weights[order[k]];
        sorted.means[k] = best.means[order[k]];
        sorted.variances[k] = best.variances[order[k]];
    }
    return sorted;
}

ShapiroWilk shapiro_wilk(std::vector<double> x) {
    const std::size_t n = x.size();
    if (n < 3 || n > 5000) throw std::invalid_argument("shapiro_wilk: sample size must lie in [3, 5000], got " + std::to_string(n));
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    if (range < 1e-19) throw std::domain_error("shapiro_wilk: all values are identical");

    static const double g[2] = {-2.273, .459};
    static const double c1[6] = {0., .221157, -.147981, -2.07119, 4.434685, -2.706056};
    static const double c2[6] = {0., .042981, -.293762, -1.752461, 5.682633, -3.582633};
    static const double c3[4] = {.544, -.39978, .025054, -6.714e-4};
    static const double c4[4] = {1.3822, -.77857, .062767, -.0020322};
    static const double c5[4] = {-1.5861, -.31082, -.083751, .0038915};
    static const double c6[3] = {-.4803, -.082676, .0030302};

    const std::size_t n2 = n / 2;
    const double an = double(n);
    std::vector<double> a(n2 + 1, 0.0);  // 1-based
    if (n == 3) {
        a[1] = std::sqrt(0.5);
    } else {
        const double an25 = an + .25;
        std::vector<double> m(n2 + 1);
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= n2; ++i) {
            m[i] = std_normal_quantile((double(i) - .375) / an25);
            summ2 += m[i] * m[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, 6, rsn) - m[1] / ssumm2;
        std::size_t i1;
        double fac;
        if (n > 5) {
            i1 = 3;
            const double a2 = -m[2] / ssumm2 + poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * m[1] * m[1] - 2.0 * m[2] * m[2]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[2] = a2;
        } else {
            i1 = 2;
            fac = std::sqrt((summ2 - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1));
        }
        a[1] = a1;
        for (std::size_t i = i1; i <= n2; ++i) a[i] = -m[i] / fac;
    }

    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / an;
    double ssq = 0.0;
    for (double v : x) ssq += (v - mean) * (v - mean);
    double num = 0.0;
    for (std::size_t i = 1; i <= n2; ++i) num += a[i] * (x[n - i] - x[i - 1]);
    double w = std::min(num * num / ssq, 1.0);

    ShapiroWilk out;
    out.w = w;
    if (n == 3) {
        const double pi6 = 1.90985931710274, stqr = 1.04719755119660;
        out.p_value = std::max(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0);
        return out;
    }
    double w1 = std::log(1.0 - w);
    const double xx = std::log(an);
    double mu, s;
    if (n <= 11) {
        const double gamma = poly(g, 2, an);
        if (w1 >= gamma) {
            out.p_value = 1e-99;
            return out;
        }
        w1 = -std::log(gamma - w1);
        mu = poly(c3, 4, an);
        s = std::exp(poly(c4, 4, an));
    } else {
        mu = poly(c5, 4, xx);
        s = std::exp(poly(c6, 3, xx));
    }
    out.p_value = std_normal_ccdf((w1 - mu) / s);
    return out;
}

std::string to_string(ColumnModel m) {
    switch (m) {
        case ColumnModel::gauss1: return "gauss1";
        case ColumnModel::gmm2: return "gmm2";
        case ColumnModel::gmm3: return "gmm3";
    }
    return "?";
}

DiscretizationEntry discretization_test(const std::vector<double>& column, Rng& rng) {
    DiscretizationEntry e;
    const std::size_t n = column.size();
    if (n < 30) {
        e.warning = "fewer than 30 values; kept continuous";
        return e;
    }
    std::vector<GmmFit> fits(3);
    std::vector<bool> ok(3, false);
    e.bic.assign(3, kInf);
    for (int K = 1; K <= 3; ++K) {
        try {
            fits[K - 1] = fit_gmm(column, K, rng);
            ok[K - 1] = true;
            e.bic[K - 1] = -2.0 * fits[K - 1].loglik + double(3 * K - 1) * std::log(double(n));
        } catch (const std::exception& ex) {
            if (K == 1) {
                e.warning = std::string(ex.what()) + "; kept continuous";
                return e;
            }
        }
    }
    int best = 0;
    for (int k = 1; k < 3; ++k)
        if (ok[k] && e.bic[k] < e.bic[best]) best = k;
    e.chosen = static_cast<ColumnModel>(best);
    if (best == 0) return e;

    const GmmFit& f = fits[best];
    const int K = best + 1;
    std::vector<int> comp(n);
    std::vector<std::vector<double>> members(K);
    for (std::size_t i = 0; i < n; ++i) {
        int arg = 0;
        double top = -kInf;
        for (int k = 0; k < K; ++k) {
            const double lp = std::log(f.weights[k]) + normal_logpdf(column[i], f.means[k], f.variances[k]);
            if (lp > top) {
                top = lp;
                arg = k;
            }
        }
        comp[i] = arg;
        members[arg].push_back(column[i]);
    }
    bool fails = false;
    for (int k = 0; k < K; ++k) {
        auto& mem = members[k];
        if (mem.size() < 3) {
            e.component_p_values.push_back(std::nan(""));
            continue;
        }
        if (mem.size() > 5000) {
            Rng sub = rng.child("sw-subsample", {static_cast<std::uint64_t>(k)});
            std::vector<double> pick(5000);
            for (auto& v : pick) v = mem[sub.below(mem.size())];
            mem = std::move(pick);
        }
        double pv = 1.0;
        try {
            pv = shapiro_wilk(mem).p_value;
        } catch (const std::domain_error&) {
            pv = 0.0;  // all members tied: a point mass is not normal
        }
        e.component_p_values.push_back(pv);
        if (pv < 0.05) fails = true;
    }
    if (!fails) return e;

    std::vector<int> relabel(K, -1);
    int next = 0;
    for (int k = 0; k < K; ++k)
        if (!members[k].empty()) relabel[k] = next++;
    if (next < 2) return e;
    e.discrete = true;
    e.levels = next;
    e.codes.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.codes[i] = relabel[comp[i]];
    return e;
}

std::vector<std::size_t> hier_cluster_blocks(const Matrix& background, std::size_t k) {
    const std::size_t n = static_cast<std::size_t>(background.rows());
    if (background.cols() < 2) throw std::invalid_argument("hier_cluster_blocks: at least 2 features required");
    if (k == 0 || k > n) throw std::invalid_argument("hier_cluster_blocks: cluster count must lie in [1, n]");
    const Matrix z = zscore_columns(background);

    // Ward via nearest-neighbour chain on squared Euclidean distances with
    // Lance-Williams updates.
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) d(i, j) = (z.row(i) - z.row(j)).squaredNorm();
    std::vector<double> size(n, 1.0);
    std::vector<char> active(n, 1);
    struct Merge {
        double height;
        std::size_t a, b;
    };
    std::vector<Merge> merges;
    std::vector<std::size_t> chain;
    for (std::size_t remaining = n; remaining > 1;) {
        if (chain.empty())
            for (std::size_t i = 0; i < n; ++i)
                if (active[i]) {
                    chain.push_back(i);
                    break;
                }
        const std::size_t top = chain.back();
        const std::size_t prev = chain.size() > 1 ? chain[chain.size() - 2] : n;
        std::size_t nn = prev;
        double best = prev < n ? d(top, prev) : kInf;
        for (std::size_t j = 0; j < n; ++j) {
            if (!active[j] || j == top) continue;
            if (d(top, j) < best) {
                best = d(top, j);
                nn = j;
            }
        }
        if (nn != prev) {
            chain.push_back(nn);
            continue;
        }
        chain.pop_back();
        chain.pop_back();
        const std::size_t a = std::min(top, prev), b = std::max(top, prev);
        merges.push_back({best, a, b});
        for (std::size_t j = 0; j < n; ++j) {
            if (!active[j] || j == a || j == b) continue;
            const double nj = size[j], na = size[a], nb = size[b];
            const double v = ((na + nj) * d(a, j) + (nb + nj) * d(b, j) - nj * d(a, b)) / (na + nb + nj);
            d(a, j) = d(j, a) = v;
        }
        size[a] += size[b];
        active[b] = 0;
        --remaining;
    }
    std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t u) {
        while (parent[u] != u) u = parent[u] = parent[parent[u]];
        return u;
    };
    // Merges recorded by representative index; replaying them in height order
    // with union-find reproduces the dendrogram's partitions.
    for (std::size_t m = 0; m + k < n; ++m) {
        const std::size_t ra = find(merges[m].a), rb = find(merges[m].b);
        parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    std::vector<std::size_t> label(n, n), out(n);
    std::size_t next = 0;
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t r = find(u);
        if (label[r] == n) label[r] = next++;
        out[u] = label[r];
    }
    return out;
}

IngestResult ingest_expression(const std::string& csv_path, const IngestOptions& options) {
    const CsvTable table = read_csv(csv_path);
    IngestResult out;
    MixedDataset& x = out.data;
    const std::size_t n = table.rows.size(), p = table.header.size();
    x.values.resize(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) x.values(i, j) = table.rows[i][j];
    x.unit_ids = table.unit_ids;
    x.block.clear();
    for (const auto& [name, kind] : options.overrides) {
        if (kind != "continuous" && kind != "discrete")
            throw std::invalid_argument("override for '" + name + "' must be continuous or discrete");
        if (std::find(table.header.begin(), table.header.end(), name) == table.header.end())
            throw std::invalid_argument("override names unknown column '" + name + "'");
    }

    Rng root = Rng::stream(options.seed, "discretization");
    out.report.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        const std::string& name = table.header[j];
        DiscretizationEntry& e = out.report[j];
        const auto it = options.overrides.find(name);
        if (it != options.overrides.end()) {
            e.pinned = true;
            e.discrete = it->second == "discrete";
            if (e.discrete) {
                int top = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double v = x.values(i, j);
                    if (v != std::floor(v) || v < 0)
                        throw std::invalid_argument("column '" + name + "' pinned discrete but row " +
                                                    std::to_string(i + 2) + " is not a non-negative integer code");
                    top = std::max(top, static_cast<int>(v));
                }
                e.levels = top + 1;
            }
        } else {
            std::vector<double> col(x.values.col(j).data(), x.values.col(j).data() + n);
            Rng rng = root.child("column", {j});
            e = discretization_test(col, rng);
            if (e.discrete)
                for (std::size_t i = 0; i < n; ++i) x.values(i, j) = e.codes[i];
        }
        e.name = name;
        if (e.discrete) {
            x.specs.push_back(VariableSpec::make_discrete(name, e.levels));
        } else {
            x.specs.push_back(VariableSpec::make_continuous(name));
            if (options.standardize_continuous) {
                const double mean = x.values.col(j).mean();
                const double sd = std::sqrt((x.values.col(j).array() - mean).square().mean());
                if (sd > 0)
                    x.values.col(j) = ((x.values.col(j).array() - mean) / sd).matrix();
                else
                    x.values.col(j).setZero();
            }
        }
    }
    return out;
}

}  // namespace mixdag
