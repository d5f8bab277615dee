#include "mixdag/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mixdag/normal.hpp"

namespace mixdag {

LearnerKind parse_learner(const std::string& name) {
    if (name == "pc") return LearnerKind::pc;
    if (name == "hc") return LearnerKind::hc;
    if (name == "hybrid") return LearnerKind::hybrid;
    throw std::invalid_argument("unknown learner '" + name + "' (expected pc, hc or hybrid)");
}

std::string to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::pc: return "pc";
        case LearnerKind::hc: return "hc";
        case LearnerKind::hybrid: return "hybrid";
    }
    return "?";
}

namespace {

Matrix correlation_of(const Matrix& data) {
    const Eigen::Index n = data.rows(), p = data.cols();
    Matrix centered = data.rowwise() - data.colwise().mean();
    Matrix cov = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(n, 1));
    Vector sd(p);
    for (Eigen::Index j = 0; j < p; ++j) sd(j) = std::sqrt(std::max(cov(j, j), 0.0));
    Matrix corr = Matrix::Identity(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            const double r = sd(i) > 0 && sd(j) > 0 ? std::clamp(cov(i, j) / (sd(i) * sd(j)), -1.0, 1.0) : 0.0;
            corr(i, j) = corr(j, i) = r;
        }
    return corr;
}

constexpr std::size_t kMemoCapacity = 1u << 20;

}  // namespace

CiTestCache::CiTestCache(const Matrix& data)
    : corr_(correlation_of(data)), n_(static_cast<double>(data.rows())) {}

CiTestCache::CiTestCache(SymMatrix correlation, double n_effective) : corr_(std::move(correlation)), n_(n_effective) {}

double CiTestCache::partial_correlation(std::size_t i, std::size_t j, std::span<const std::size_t> S) const {
    if (S.empty()) return corr_(i, j);
    const std::size_t k = S.size() + 2;
    Matrix sub(k, k);
    std::vector<std::size_t> idx{i, j};
    idx.insert(idx.end(), S.begin(), S.end());
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) sub(a, b) = corr_(idx[a], idx[b]);
    Eigen::LLT<Matrix> llt(sub);
    if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() < 1e-7) return std::nan("");
    const Matrix prec = llt.solve(Matrix::Identity(k, k));
    return -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
}

double CiTestCache::p_value(std::size_t i, std::size_t j, std::span<const std::size_t> S) {
    std::vector<std::size_t> key{std::min(i, j), std::max(i, j)};
    key.insert(key.end(), S.begin(), S.end());
    std::sort(key.begin() + 2, key.end());
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
    }
    const double r = partial_correlation(key[0], key[1], std::span<const std::size_t>(key).subspan(2));
    double pv = 1.0;
    const double df = n_ - static_cast<double>(S.size()) - 3.0;
    if (std::isnan(r)) {
        ++singular_;
    } else if (df > 0) {
        if (std::fabs(r) >= 1.0) {
            pv = 0.0;
        } else {
            const double z = std::atanh(r) * std::sqrt(df);
            pv = std::min(1.0, 2.0 * std_normal_ccdf(std::fabs(z)));
        }
    }
    std::lock_guard<std::mutex> lock(mu_);
    if (memo_.size() < kMemoCapacity) memo_.emplace(std::move(key), pv);
    return pv;
}

double fisher_z_test(std::size_t i, std::size_t j, std::span<const std::size_t> S, CiTestCache& cache) {
    return cache.p_value(i, j, S);
}

int effective_max_condition(int requested, std::size_t p) {
    if (requested >= 0) return requested;
    return p >= 100 ? 3 : -1;
}

namespace {

/// Calls fn on every size-l subset of `items` in lexicographic order.
template <class Fn>
void for_each_subset(const std::vector<std::size_t>& items, std::size_t l, Fn&& fn) {
    const std::size_t m = items.size();
    if (l > m) return;
    std::vector<std::size_t> pos(l);
    std::iota(pos.begin(), pos.end(), 0);
    std::vector<std::size_t> subset(l);
    while (true) {
        for (std::size_t k = 0; k < l; ++k) subset[k] = items[pos[k]];
        fn(subset);
        std::size_t k = l;
        while (k > 0 && pos[k - 1] == m - l + k - 1) --k;
        if (k == 0) return;
        ++pos[k - 1];
        for (std::size_t r = k; r < l; ++r) pos[r] = pos[r - 1] + 1;
    }
}

}  // namespace

Skeleton pc_skeleton(CiTestCache& cache, double alpha, int max_condition, ThreadPool& pool) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    const std::size_t p = cache.p();
    std::vector<char> adj(p * p, 1);
    for (std::size_t i = 0; i < p; ++i) adj[i * p + i] = 0;
    Skeleton sk;
    sk.sepsets.assign(p * p, {});
    sk.separated.assign(p * p, false);

    for (std::size_t l = 0;; ++l) {
        if (max_condition >= 0 && l > static_cast<std::size_t>(max_condition)) break;
        std::vector<std::vector<std::size_t>> nb(p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                if (adj[i * p + j]) nb[i].push_back(j);
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j)
                if (adj[i * p + j] && (nb[i].size() > l || nb[j].size() > l)) edges.emplace_back(i, j);
        if (edges.empty()) break;

        struct Outcome {
            bool removed = false;
            double best = -1.0;
            std::vector<std::size_t> sepset;
        };
        std::vector<Outcome> outcomes(edges.size());
        pool.parallel_for(edges.size(), [&](std::size_t e) {
            const auto [i, j] = edges[e];
            Outcome& out = outcomes[e];
            std::vector<std::size_t> cand_i, cand_j;
            for (std::size_t k : nb[i])
                if (k != j) cand_i.push_back(k);
            for (std::size_t k : nb[j])
                if (k != i) cand_j.push_back(k);
            auto consider = [&](const std::vector<std::size_t>& S) {
                const double pv = cache.p_value(i, j, S);
                if (pv <= alpha) return;
                if (!out.removed || pv > out.best || (pv == out.best && S < out.sepset)) {
                    out.removed = true;
                    out.best = pv;
                    out.sepset = S;
                }
            };
            for_each_subset(cand_i, l, consider);
            const bool side_i_tested = cand_i.size() >= l;
            for_each_subset(cand_j, l, [&](const std::vector<std::size_t>& S) {
                if (side_i_tested &&
                    std::all_of(S.begin(), S.end(), [&](std::size_t k) { return adj[i * p + k] != 0; }))
                    return;
                consider(S);
            });
        });
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (!outcomes[e].removed) continue;
            const auto [i, j] = edges[e];
            adj[i * p + j] = adj[j * p + i] = 0;
            sk.separated[i * p + j] = sk.separated[j * p + i] = true;
            sk.sepsets[i * p + j] = sk.sepsets[j * p + i] = outcomes[e].sepset;
        }
    }
    sk.graph = Cpdag(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            if (adj[i * p + j]) sk.graph.set_undirected(i, j);
    return sk;
}

Cpdag orient_skeleton(const Skeleton& skeleton) {
    const Cpdag& g = skeleton.graph;
    const std::size_t p = g.size();
    std::vector<char> arrow(p * p, 0);
    for (std::size_t k = 0; k < p; ++k) {
        std::vector<std::size_t> nb;
        for (std::size_t i = 0; i < p; ++i)
            if (g.adjacent(i, k)) nb.push_back(i);
        for (std::size_t a = 0; a < nb.size(); ++a)
            for (std::size_t b = a + 1; b < nb.size(); ++b) {
                const std::size_t i = nb[a], j = nb[b];
                if (g.adjacent(i, j)) continue;
                const auto& sep = skeleton.sepsets[i * p + j];
                if (std::find(sep.begin(), sep.end(), k) != sep.end()) continue;
                arrow[i * p + k] = arrow[j * p + k] = 1;
            }
    }
    Cpdag c(p);
    for (const auto& [a, b] : g.undirected_edges()) {
        const bool ab = arrow[a * p + b], ba = arrow[b * p + a];
        if (ab && !ba)
            c.set_directed(a, b);
        else if (ba && !ab)
            c.set_directed(b, a);
        else
            c.set_undirected(a, b);
    }
    return meek_close(std::move(c));
}

Cpdag pc_learn(CiTestCache& cache, double alpha, int max_condition, ThreadPool& pool) {
    return orient_skeleton(pc_skeleton(cache, alpha, effective_max_condition(max_condition, cache.p()), pool));
}

Cpdag pc_learn(const Matrix& data, double alpha, int max_condition, ThreadPool& pool) {
    if (data.rows() < 10) throw std::invalid_argument("pc_learn: at least 10 rows required");
    CiTestCache cache(data);
    return pc_learn(cache, alpha, max_condition, pool);
}

BicScore::BicScore(const Matrix& data) : n_(static_cast<double>(data.rows())) {
    Matrix centered = data.rowwise() - data.colwise().mean();
    cov_ = centered.transpose() * centered / std::max(n_, 1.0);
}

double BicScore::family(std::size_t node, const std::vector<std::size_t>& parents) const {
    double rss = cov_(node, node);
    if (!parents.empty()) {
        const std::size_t k = parents.size();
        Matrix spp(k, k);
        Vector spj(k);
        for (std::size_t a = 0; a < k; ++a) {
            spj(a) = cov_(parents[a], node);
            for (std::size_t b = 0; b < k; ++b) spp(a, b) = cov_(parents[a], parents[b]);
        }
        rss -= spj.dot(spp.ldlt().solve(spj));
    }
    rss = std::max(rss, 1e-12);
    return -0.5 * n_ * std::log(rss) - 0.5 * std::log(n_) * static_cast<double>(parents.size() + 2);
}

double BicScore::total(const Dag& g) const {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += family(j, g.parents(j));
    return s;
}

namespace {

bool reaches(const Dag& g, std::size_t from, std::size_t to, std::size_t skip_from = SIZE_MAX,
             std::size_t skip_to = SIZE_MAX) {
    const std::size_t p = g.size();
    std::vector<char> seen(p, 0);
    std::vector<std::size_t> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v : g.children(u)) {
            if (u == skip_from && v == skip_to) continue;
            if (v == to) return true;
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return false;
}

}  // namespace

Dag hc_learn(const Matrix& data, const Cpdag* restrict, HillClimbTrace* trace) {
    const std::size_t p = static_cast<std::size_t>(data.cols());
    if (restrict && restrict->size() != p) throw std::invalid_argument("hc_learn: restriction size mismatch");
    const BicScore bic(data);
    Dag g(p);
    std::vector<std::vector<std::size_t>> pa(p);
    std::vector<double> score(p);
    for (std::size_t j = 0; j < p; ++j) score[j] = bic.family(j, {});
    auto allowed = [&](std::size_t i, std::size_t j) { return i != j && (!restrict || restrict->adjacent(i, j)); };

    // delta[i * p + j]: score change of deleting i -> j when present, else of adding it
    std::vector<double> delta(p * p, 0.0);
    auto refresh = [&](std::size_t j) {
        for (std::size_t i = 0; i < p; ++i) {
            if (!allowed(i, j)) continue;
            std::vector<std::size_t> next = pa[j];
            if (g.has_edge(i, j))
                next.erase(std::find(next.begin(), next.end(), i));
            else
                next.insert(std::lower_bound(next.begin(), next.end(), i), i);
            delta[i * p + j] = bic.family(j, next) - score[j];
        }
    };
    for (std::size_t j = 0; j < p; ++j) refresh(j);
    if (trace) trace->scores.assign(1, std::accumulate(score.begin(), score.end(), 0.0));

    enum Kind { add = 0, remove = 1, reverse = 2 };
    struct Move {
        double gain;
        int kind;
        std::size_t i, j;
    };
    std::vector<Move> moves;
    while (true) {
        moves.clear();
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                if (!allowed(i, j)) continue;
                if (g.has_edge(i, j)) {
                    moves.push_back({delta[i * p + j], remove, i, j});
                    moves.push_back({delta[i * p + j] + delta[j * p + i], reverse, i, j});
                } else if (!g.has_edge(j, i)) {
                    moves.push_back({delta[i * p + j], add, i, j});
                }
            }
        std::erase_if(moves, [](const Move& m) { return !(m.gain > 1e-9); });
        std::sort(moves.begin(), moves.end(), [](const Move& a, const Move& b) {
            if (a.gain != b.gain) return a.gain > b.gain;
            if (a.kind != b.kind) return a.kind < b.kind;
            return std::tie(a.i, a.j) < std::tie(b.i, b.j);
        });
        const Move* chosen = nullptr;
        for (const Move& m : moves) {
            if (m.kind == add && reaches(g, m.j, m.i)) continue;
            if (m.kind == reverse && reaches(g, m.i, m.j, m.i, m.j)) continue;
            chosen = &m;
            break;
        }
        if (!chosen) break;
        const auto [gain, kind, i, j] = *chosen;
        auto set_parents = [&](std::size_t node) {
            pa[node] = g.parents(node);
            score[node] = bic.family(node, pa[node]);
        };
        if (kind == add) {
            g.add_edge(i, j);
            set_parents(j);
            refresh(j);
        } else if (kind == remove) {
            g.remove_edge(i, j);
            set_parents(j);
            refresh(j);
        } else {
            g.remove_edge(i, j);
            g.add_edge(j, i);
            set_parents(i);
            set_parents(j);
            refresh(i);
            refresh(j);
        }
        (void)gain;
        if (trace) trace->scores.push_back(std::accumulate(score.begin(), score.end(), 0.0));
    }
    return g;
}

Cpdag hybrid_learn(const Matrix& data, double alpha, int max_condition, ThreadPool& pool) {
    if (data.rows() < 10) throw std::invalid_argument("hybrid_learn: at least 10 rows required");
    CiTestCache cache(data);
    const Skeleton sk = pc_skeleton(cache, alpha, effective_max_condition(max_condition, cache.p()), pool);
    return dag_to_cpdag(hc_learn(data, &sk.graph));
}

Cpdag run_learner(const Matrix& data, const LearnOptions& options, ThreadPool& pool) {
    switch (options.learner) {
        case LearnerKind::pc: return pc_learn(data, options.alpha, options.max_condition, pool);
        case LearnerKind::hc: return dag_to_cpdag(hc_learn(data));
        case LearnerKind::hybrid: return hybrid_learn(data, options.alpha, options.max_condition, pool);
    }
    throw std::logic_error("unreachable learner kind");
}

Cpdag combine_consensus(const std::vector<Cpdag>& graphs) {
    if (graphs.empty()) throw std::invalid_argument("combine_consensus: no graphs");
    const std::size_t p = graphs.front().size();
    for (const auto& g : graphs)
        if (g.size() != p) throw std::invalid_argument("combine_consensus: node counts differ");
    const std::size_t M = graphs.size();
    const std::size_t need = (M + 1) / 2;
    Cpdag out(p);
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b) {
            std::size_t present = 0;
            double ab = 0.0, ba = 0.0;
            for (const auto& g : graphs) {
                if (!g.adjacent(a, b)) continue;
                ++present;
                if (g.has_directed(a, b))
                    ab += 1.0;
                else if (g.has_directed(b, a))
                    ba += 1.0;
                else {
                    ab += 0.5;
                    ba += 0.5;
                }
            }
            if (present < need) continue;
            const double mass = static_cast<double>(present);
            if (3.0 * ab >= 2.0 * mass)
                out.set_directed(a, b);
            else if (3.0 * ba >= 2.0 * mass)
                out.set_directed(b, a);
            else
                out.set_undirected(a, b);
        }
    return meek_close(std::move(out));
}

Cpdag consensus_estimate(const std::vector<Matrix>& z_tilde, std::size_t M, const LearnOptions& options,
                         ThreadPool& pool) {
    if (M == 0 || z_tilde.size() < M)
        throw std::invalid_argument("consensus_estimate: need " + std::to_string(M) + " matrices, have " +
                                    std::to_string(z_tilde.size()));
    const std::size_t first = z_tilde.size() - M;
    std::vector<Cpdag> graphs(M);
    pool.parallel_for(M, [&](std::size_t k) { graphs[k] = run_learner(z_tilde[first + k], options, pool); });
    return combine_consensus(graphs);
}

Cpdag average_estimate(const std::vector<Matrix>& z_tilde, std::size_t M, const LearnOptions& options,
                       ThreadPool& pool) {
    if (M == 0 || z_tilde.size() < M)
        throw std::invalid_argument("average_estimate: need " + std::to_string(M) + " matrices, have " +
                                    std::to_string(z_tilde.size()));
    Matrix mean = Matrix::Zero(z_tilde.back().rows(), z_tilde.back().cols());
    for (std::size_t k = z_tilde.size() - M; k < z_tilde.size(); ++k) mean += z_tilde[k];
    mean /= static_cast<double>(M);
    return run_learner(mean, options, pool);
}

Cpdag baseline_estimate(const MixedDataset& x, const LearnOptions& options, ThreadPool& pool) {
    return run_learner(zscore_columns(x.values), options, pool);
}

}  // namespace mixdag
