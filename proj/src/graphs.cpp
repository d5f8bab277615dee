#include "mixdag/graphs.hpp"

#include <algorithm>
#include <queue>

namespace mixdag {

Dag::Dag(std::size_t p, std::vector<std::string> labels) : p_(p), adj_(p * p, 0), labels_(std::move(labels)) {
    if (labels_.empty()) {
        labels_.reserve(p);
        for (std::size_t i = 0; i < p; ++i) labels_.push_back("X" + std::to_string(i));
    } else if (labels_.size() != p) {
        throw std::invalid_argument("Dag: label count does not match node count");
    }
}

void Dag::add_edge(std::size_t from, std::size_t to) {
    if (from >= p_ || to >= p_) throw std::out_of_range("Dag::add_edge: node index out of range");
    if (from == to) throw std::invalid_argument("Dag::add_edge: self-loops are not allowed");
    auto& cell = adj_[from * p_ + to];
    if (!cell) {
        cell = 1;
        ++count_;
    }
}

void Dag::remove_edge(std::size_t from, std::size_t to) {
    auto& cell = adj_[from * p_ + to];
    if (cell) {
        cell = 0;
        --count_;
    }
}

std::vector<std::size_t> Dag::parents(std::size_t node) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < p_; ++i)
        if (has_edge(i, node)) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dag::children(std::size_t node) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < p_; ++j)
        if (has_edge(node, j)) out.push_back(j);
    return out;
}

std::vector<std::vector<std::size_t>> Dag::parent_sets() const {
    std::vector<std::vector<std::size_t>> out(p_);
    for (std::size_t j = 0; j < p_; ++j) out[j] = parents(j);
    return out;
}

std::vector<Edge> Dag::edges() const {
    std::vector<Edge> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < p_; ++i)
        for (std::size_t j = 0; j < p_; ++j)
            if (has_edge(i, j)) out.emplace_back(i, j);
    return out;
}

Cpdag::Cpdag(std::size_t p) : p_(p), dir_(p * p, 0), und_(p * p, 0) {}

void Cpdag::remove(std::size_t a, std::size_t b) {
    dir_[a * p_ + b] = dir_[b * p_ + a] = 0;
    und_[a * p_ + b] = und_[b * p_ + a] = 0;
}

void Cpdag::set_directed(std::size_t from, std::size_t to) {
    if (from >= p_ || to >= p_) throw std::out_of_range("Cpdag: node index out of range");
    if (from == to) throw std::invalid_argument("Cpdag: self-loops are not allowed");
    remove(from, to);
    dir_[from * p_ + to] = 1;
}

void Cpdag::set_undirected(std::size_t a, std::size_t b) {
    if (a >= p_ || b >= p_) throw std::out_of_range("Cpdag: node index out of range");
    if (a == b) throw std::invalid_argument("Cpdag: self-loops are not allowed");
    remove(a, b);
    und_[a * p_ + b] = und_[b * p_ + a] = 1;
}

std::vector<Edge> Cpdag::directed_edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < p_; ++i)
        for (std::size_t j = 0; j < p_; ++j)
            if (has_directed(i, j)) out.emplace_back(i, j);
    return out;
}

std::vector<Edge> Cpdag::undirected_edges() const {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < p_; ++i)
        for (std::size_t j = i + 1; j < p_; ++j)
            if (has_undirected(i, j)) out.emplace_back(i, j);
    return out;
}

std::size_t Cpdag::edge_count() const { return directed_edges().size() + undirected_edges().size(); }

std::vector<std::size_t> topological_order(const Dag& g) {
    const std::size_t p = g.size();
    std::vector<std::size_t> indegree(p, 0);
    for (const auto& [from, to] : g.edges()) ++indegree[to];
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < p; ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    order.reserve(p);
    while (!ready.empty()) {
        const std::size_t v = ready.top();
        ready.pop();
        order.push_back(v);
        for (std::size_t c : g.children(v))
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order.size() != p) throw CyclicGraphError("topological_order: graph contains a cycle");
    return order;
}

bool is_acyclic(const Dag& g) {
    try {
        topological_order(g);
        return true;
    } catch (const CyclicGraphError&) {
        return false;
    }
}

Cpdag skeleton_of(const Dag& g) {
    Cpdag c(g.size());
    for (const auto& [a, b] : g.edges()) c.set_undirected(a, b);
    return c;
}

Cpdag dag_to_cpdag(const Dag& g) {
    topological_order(g);
    const std::size_t p = g.size();
    Cpdag c = skeleton_of(g);
    for (std::size_t k = 0; k < p; ++k) {
        const auto pa = g.parents(k);
        for (std::size_t x = 0; x < pa.size(); ++x) {
            for (std::size_t y = x + 1; y < pa.size(); ++y) {
                if (!g.adjacent(pa[x], pa[y])) {
                    c.set_directed(pa[x], k);
                    c.set_directed(pa[y], k);
                }
            }
        }
    }
    return meek_close(std::move(c));
}

namespace {

bool r1(const Cpdag& c, std::size_t a, std::size_t b) {
    for (std::size_t x = 0; x < c.size(); ++x)
        if (x != b && c.has_directed(x, a) && !c.adjacent(x, b)) return true;
    return false;
}

bool r2(const Cpdag& c, std::size_t a, std::size_t b) {
    for (std::size_t x = 0; x < c.size(); ++x)
        if (c.has_directed(a, x) && c.has_directed(x, b)) return true;
    return false;
}

bool r3(const Cpdag& c, std::size_t a, std::size_t b) {
    const std::size_t p = c.size();
    for (std::size_t x = 0; x < p; ++x) {
        if (!(c.has_directed(x, b) && c.has_undirected(a, x))) continue;
        for (std::size_t y = x + 1; y < p; ++y) {
            if (c.has_directed(y, b) && c.has_undirected(a, y) && !c.adjacent(x, y)) return true;
        }
    }
    return false;
}

bool r4(const Cpdag& c, std::size_t a, std::size_t b) {
    const std::size_t p = c.size();
    for (std::size_t x = 0; x < p; ++x) {
        if (x == b || !c.has_undirected(a, x) || c.adjacent(x, b)) continue;
        for (std::size_t y = 0; y < p; ++y) {
            if (y != a && c.has_directed(x, y) && c.has_directed(y, b) && c.adjacent(a, y)) return true;
        }
    }
    return false;
}

}  // namespace

Cpdag meek_close(Cpdag c) {
    const std::size_t p = c.size();
    for (;;) {
        std::vector<Edge> proposals;
        for (const auto& [u, v] : c.undirected_edges()) {
            for (const auto& [a, b] : {Edge{u, v}, Edge{v, u}}) {
                if (r1(c, a, b) || r2(c, a, b) || r3(c, a, b) || r4(c, a, b)) proposals.emplace_back(a, b);
            }
        }
        std::vector<std::uint8_t> proposed(p * p, 0);
        for (const auto& [a, b] : proposals) proposed[a * p + b] = 1;
        bool changed = false;
        for (const auto& [a, b] : proposals) {
            if (proposed[b * p + a]) continue;
            c.set_directed(a, b);
            changed = true;
        }
        if (!changed) return c;
    }
}

Dag cpdag_to_dag(const Cpdag& c) {
    const std::size_t p = c.size();
    Dag out(p);
    for (const auto& [a, b] : c.directed_edges()) out.add_edge(a, b);

    Cpdag work = c;
    std::vector<char> alive(p, 1);
    std::size_t remaining = p;
    auto is_sink = [&](std::size_t x) {
        for (std::size_t y = 0; y < p; ++y)
            if (alive[y] && work.has_directed(x, y)) return false;
        return true;
    };
    auto absorb = [&](std::size_t x) {
        for (std::size_t y = 0; y < p; ++y) {
            if (alive[y] && y != x && work.has_undirected(x, y)) out.add_edge(y, x);
        }
        alive[x] = 0;
        --remaining;
    };
    while (remaining > 0) {
        std::size_t pick = p;
        for (std::size_t x = 0; x < p && pick == p; ++x) {
            if (!alive[x] || !is_sink(x)) continue;
            bool ok = true;
            for (std::size_t y = 0; y < p && ok; ++y) {
                if (!alive[y] || y == x || !work.has_undirected(x, y)) continue;
                for (std::size_t z = 0; z < p && ok; ++z) {
                    if (alive[z] && z != x && z != y && work.adjacent(x, z) && !work.adjacent(y, z)) ok = false;
                }
            }
            if (ok) pick = x;
        }
        if (pick == p) {
            for (std::size_t x = 0; x < p && pick == p; ++x)
                if (alive[x] && is_sink(x)) pick = x;
        }
        if (pick == p) {
            // directed cycle among the remaining nodes: drop outgoing arcs of the lowest one
            for (std::size_t x = 0; x < p && pick == p; ++x) {
                if (!alive[x]) continue;
                pick = x;
                for (std::size_t y = 0; y < p; ++y) {
                    if (alive[y] && work.has_directed(x, y)) {
                        out.remove_edge(x, y);
                        work.remove(x, y);
                    }
                }
            }
        }
        absorb(pick);
    }
    return out;
}

}  // namespace mixdag
