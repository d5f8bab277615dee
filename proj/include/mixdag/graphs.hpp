#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mixdag {

using Edge = std::pair<std::size_t, std::size_t>;

class CyclicGraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Directed graph over p nodes stored as a dense adjacency bitmap. Acyclicity
/// is checked by topological_order, not on every insertion.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::size_t p, std::vector<std::string> labels = {});

    std::size_t size() const { return p_; }
    bool has_edge(std::size_t from, std::size_t to) const { return adj_[from * p_ + to] != 0; }
    bool adjacent(std::size_t a, std::size_t b) const { return has_edge(a, b) || has_edge(b, a); }

    void add_edge(std::size_t from, std::size_t to);
    void remove_edge(std::size_t from, std::size_t to);

    std::vector<std::size_t> parents(std::size_t node) const;
    std::vector<std::size_t> children(std::size_t node) const;
    std::vector<std::vector<std::size_t>> parent_sets() const;
    /// Edges sorted lexicographically.
    std::vector<Edge> edges() const;
    std::size_t edge_count() const { return count_; }

    const std::vector<std::string>& labels() const { return labels_; }

    bool operator==(const Dag& other) const { return p_ == other.p_ && adj_ == other.adj_; }

private:
    std::size_t p_ = 0;
    std::vector<std::uint8_t> adj_;
    std::size_t count_ = 0;
    std::vector<std::string> labels_;
};

/// Partially directed graph: every adjacent pair is either directed one way or
/// undirected, never both.
class Cpdag {
public:
    Cpdag() = default;
    explicit Cpdag(std::size_t p);

    std::size_t size() const { return p_; }
    bool has_directed(std::size_t from, std::size_t to) const { return dir_[from * p_ + to] != 0; }
    bool has_undirected(std::size_t a, std::size_t b) const { return und_[a * p_ + b] != 0; }
    bool adjacent(std::size_t a, std::size_t b) const {
        return has_undirected(a, b) || has_directed(a, b) || has_directed(b, a);
    }

    /// Replaces whatever edge joins the pair.
    void set_directed(std::size_t from, std::size_t to);
    void set_undirected(std::size_t a, std::size_t b);
    void remove(std::size_t a, std::size_t b);

    std::vector<Edge> directed_edges() const;
    /// Undirected edges as (a, b) with a < b.
    std::vector<Edge> undirected_edges() const;
    std::size_t edge_count() const;

    bool operator==(const Cpdag& other) const {
        return p_ == other.p_ && dir_ == other.dir_ && und_ == other.und_;
    }

private:
    std::size_t p_ = 0;
    std::vector<std::uint8_t> dir_;
    std::vector<std::uint8_t> und_;
};

/// Kahn's algorithm taking the smallest available index first, so the order is
/// canonical. Throws CyclicGraphError on a cycle.
std::vector<std::size_t> topological_order(const Dag& g);
bool is_acyclic(const Dag& g);

/// Completed pattern: v-structures directed, then Meek closure.
Cpdag dag_to_cpdag(const Dag& g);

/// Applies Meek rules R1-R4 until no rule fires. Each round evaluates every
/// rule against the same snapshot and applies the proposals together; a pair
/// proposed in both directions is left undirected. The result therefore does
/// not depend on node numbering.
Cpdag meek_close(Cpdag c);

/// Any DAG in the class described by c (Dor-Tarsi extension). Graphs that
/// admit no consistent extension are still oriented acyclically: remaining
/// undirected edges point into the lowest-index directed sink, and directed
/// cycles are broken at their lowest-index node.
Dag cpdag_to_dag(const Cpdag& c);

/// Undirected skeleton of a DAG as a Cpdag with only undirected edges.
Cpdag skeleton_of(const Dag& g);

}  // namespace mixdag
