#pragma once

#include <memory>
#include <span>
#include <vector>

#include "liftlab/blueprint.hpp"
#include "liftlab/bundle.hpp"
#include "liftlab/graph.hpp"

namespace liftlab {

// A lift of a blueprint: a graph G with a homomorphism pi : G -> B and an
// injective naming of the vertices over input classes.
class LiftedModule {
public:
    LiftedModule() = default;

    const Blueprint& blueprint() const { return *bp_; }
    const std::shared_ptr<const Blueprint>& blueprint_ptr() const { return bp_; }
    const Graph& graph() const { return g_; }
    int num_vertices() const { return g_.num_vertices(); }
    int num_edges() const { return g_.num_edges(); }

    int pi(int v) const { return pi_[v]; }
    std::span<const int> projection() const { return pi_; }
    int base_edge(int e) const { return pi_e_[e]; }
    std::span<const int> edge_projection() const { return pi_e_; }

    // Name index of an input vertex, -1 elsewhere.
    int name(int v) const { return name_[v]; }
    std::span<const int> naming() const { return name_; }
    // Lifted vertex carrying a name, -1 when the name is not used.
    int vertex_of_name(int n) const { return vertex_of_name_[n]; }

    std::span<const int> fibre(int b) const { return fibres_[b]; }
    int class_size(int b) const { return static_cast<int>(fibres_[b].size()); }
    // Vertices over terminal base vertices, ascending.
    std::span<const int> terminals() const { return terminals_; }

    bool is_input(int v) const { return bp_->is_input(pi_[v]); }
    int y_dim(int v) const { return bp_->y_dim(pi_[v]); }
    int slot(int e) const { return bp_->parent_slot(pi_e_[e]); }

    const Bundle& activation_bundle() const { return act_bundle_; }
    const Bundle& weight_bundle() const { return w_bundle_; }
    // Bundle over the blueprint's name set.
    const Bundle& input_bundle() const { return in_bundle_; }

    VertexMap projection_map() const { return {g_, bp_->graph(), pi_}; }

    friend LiftedModule lift_module(std::shared_ptr<const Blueprint>, Graph, std::vector<int>, std::vector<int>);

private:
    std::shared_ptr<const Blueprint> bp_;
    Graph g_;
    std::vector<int> pi_, pi_e_, name_, vertex_of_name_;
    std::vector<std::vector<int>> fibres_;
    std::vector<int> terminals_;
    Bundle act_bundle_, w_bundle_, in_bundle_;
};

// Throws BadHomomorphism when pi is not a homomorphism and BadInputNaming when
// `names` is not injective, not defined exactly on input vertices, or does
// not commute with the typing of names.
LiftedModule lift_module(std::shared_ptr<const Blueprint> bp, Graph g, std::vector<int> pi,
                         std::vector<int> names);

// Per-class widths: the blueprint's lift_dim unless overridden; input classes
// are always as wide as their name list. Throws ConfigError on zero widths or
// on overrides that disagree with the name list.
std::vector<int> resolve_lift_dims(const Blueprint& bp, std::span<const int> overrides = {});

// First lifted vertex id of each base class when classes are laid out in base
// topological order, so that ascending lifted ids are topological.
std::vector<int> class_offsets(const Blueprint& bp, std::span<const int> dims);

// Lift with vertices (b, i), i < n_b, and every edge over a base edge.
LiftedModule fully_connected_lift(std::shared_ptr<const Blueprint> bp, std::span<const int> dims = {});

// Lift of `bp` with the given per-class widths and lifted edge list, laid out
// as in class_offsets. Edge endpoints are given as (class, index) pairs.
struct ClassEdge {
    int base_edge;
    int i;  // index in the source class
    int j;  // index in the target class
};
LiftedModule layered_lift(std::shared_ptr<const Blueprint> bp, std::span<const int> dims,
                          std::span<const ClassEdge> edges);

}  // namespace liftlab
