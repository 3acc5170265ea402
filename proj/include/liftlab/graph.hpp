#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace liftlab {

struct Edge {
    int src = 0;
    int dst = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Immutable directed acyclic graph on vertices 0..n-1.
//
// Edges are stored sorted by (src, dst); an edge id is its position in that
// order. Parent lists are ascending and aligned with the in-edge id lists.
// Copies share storage.
class Graph {
public:
    Graph();

    // Throws InvalidGraph on out-of-range endpoints or duplicate edges and
    // CycleDetected when the edges contain a cycle (self-loops included).
    static Graph build(int num_vertices, std::vector<Edge> edges);

    int num_vertices() const { return d_->n; }
    int num_edges() const { return static_cast<int>(d_->edges.size()); }

    std::span<const Edge> edges() const { return d_->edges; }
    const Edge& edge(int e) const { return d_->edges[e]; }

    std::span<const int> parents(int v) const;
    std::span<const int> in_edges(int v) const;
    std::span<const int> children(int v) const;
    // Out-edge ids of v form the contiguous range [first, second).
    std::pair<int, int> out_edge_range(int v) const;

    int in_degree(int v) const { return static_cast<int>(parents(v).size()); }
    int out_degree(int v) const { return static_cast<int>(children(v).size()); }
    bool is_initial(int v) const { return in_degree(v) == 0; }
    bool is_terminal(int v) const { return out_degree(v) == 0; }

    // Edge id of (u, v) or -1.
    int find_edge(int u, int v) const;

    // Kahn order, smallest vertex id first among ready vertices.
    std::span<const int> topological_order() const { return d_->topo; }

    bool same_storage(const Graph& other) const { return d_ == other.d_; }
    friend bool operator==(const Graph& a, const Graph& b);

private:
    struct Data {
        int n = 0;
        std::vector<Edge> edges;
        std::vector<int> in_off, in_src, in_eid;
        std::vector<int> out_off, out_dst;
        std::vector<int> topo;
    };
    std::shared_ptr<const Data> d_;
};

// Deterministic topological sort with the smallest-id tie-break.
// Throws CycleDetected listing one cycle.
std::vector<int> topological_sort(int num_vertices, std::span<const Edge> edges);

// A vertex map between two graphs. `image[v]` is the image of source vertex v.
struct VertexMap {
    Graph source;
    Graph target;
    std::vector<int> image;

    int operator()(int v) const { return image[v]; }
};

// Throws IndexMismatch when the map has the wrong length or out-of-range
// images, and NotAHomomorphism naming the first edge with no image edge.
void validate_homomorphism(const VertexMap& f);

// Target edge id for every source edge; requires a homomorphism.
std::vector<int> edge_images(const VertexMap& f);

struct FibrationViolation {
    int vertex = -1;                 // source vertex whose parents are not bijective
    std::vector<int> missing;        // target parents with no preimage among its parents
    std::vector<int> duplicated;     // target parents hit more than once
};

struct FibrationReport {
    std::vector<FibrationViolation> violations;
    bool ok() const { return violations.empty(); }
    std::string describe() const;
};

// Checks that f is a homomorphism whose restriction to the parents of every
// vertex v is a bijection onto the parents of f(v).
FibrationReport validate_fibration(const VertexMap& f);

// g after f. Throws DomainMismatch unless f.target equals g.source.
VertexMap compose_maps(const VertexMap& f, const VertexMap& g);

VertexMap identity_map(const Graph& g);

// Edge-list text: one "u v" pair per line, '#' starts a comment, a line with
// a single integer declares an (isolated) vertex. The vertex count is one more
// than the largest id seen, or `num_vertices` when given.
Graph read_edge_list(std::istream& in, int num_vertices = -1);
Graph load_edge_list(const std::string& path, int num_vertices = -1);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace liftlab
