#include "liftlab/lifted_module.hpp"

#include <string>

#include "liftlab/errors.hpp"

namespace liftlab {

LiftedModule lift_module(std::shared_ptr<const Blueprint> bp, Graph g, std::vector<int> pi,
                         std::vector<int> names) {
    LiftedModule lm;
    const int n = g.num_vertices();
    if (static_cast<int>(pi.size()) != n)
        throw BadHomomorphism("projection has " + std::to_string(pi.size()) + " entries for " +
                              std::to_string(n) + " vertices");
    try {
        lm.pi_e_ = edge_images({g, bp->graph(), pi});
    } catch (const Error& e) {
        throw BadHomomorphism(e.what());
    }
    if (static_cast<int>(names.size()) != n)
        throw BadInputNaming("naming has " + std::to_string(names.size()) + " entries for " +
                             std::to_string(n) + " vertices");
    lm.vertex_of_name_.assign(bp->num_names(), -1);
    for (int v = 0; v < n; ++v) {
        const bool input = bp->is_input(pi[v]);
        const int c = names[v];
        if (!input) {
            if (c != -1) throw BadInputNaming("vertex " + std::to_string(v) + " is not over an input but has a name");
            continue;
        }
        if (c < 0 || c >= bp->num_names())
            throw BadInputNaming("input vertex " + std::to_string(v) + " has no valid name");
        if (bp->names()[c].vertex != pi[v])
            throw BadInputNaming("input vertex " + std::to_string(v) + " is named '" + bp->names()[c].name +
                                 "', which belongs to a different input class");
        if (lm.vertex_of_name_[c] != -1)
            throw BadInputNaming("name '" + bp->names()[c].name + "' is used by vertices " +
                                 std::to_string(lm.vertex_of_name_[c]) + " and " + std::to_string(v));
        lm.vertex_of_name_[c] = v;
    }
    lm.fibres_.assign(bp->num_vertices(), {});
    std::vector<int> ad(n), wd(g.num_edges());
    for (int v = 0; v < n; ++v) {
        lm.fibres_[pi[v]].push_back(v);
        if (bp->is_terminal(pi[v])) lm.terminals_.push_back(v);
        ad[v] = bp->y_dim(pi[v]);
    }
    for (int e = 0; e < g.num_edges(); ++e) wd[e] = bp->w_dim(lm.pi_e_[e]);
    std::vector<int> nd(bp->num_names());
    for (int c = 0; c < bp->num_names(); ++c) nd[c] = bp->y_dim(bp->names()[c].vertex);
    lm.act_bundle_ = Bundle(std::move(ad));
    lm.w_bundle_ = Bundle(std::move(wd));
    lm.in_bundle_ = Bundle(std::move(nd));
    lm.bp_ = std::move(bp);
    lm.g_ = std::move(g);
    lm.pi_ = std::move(pi);
    lm.name_ = std::move(names);
    return lm;
}

std::vector<int> resolve_lift_dims(const Blueprint& bp, std::span<const int> overrides) {
    const int nb = bp.num_vertices();
    if (!overrides.empty() && static_cast<int>(overrides.size()) != nb)
        throw ConfigError("expected " + std::to_string(nb) + " lift widths, got " + std::to_string(overrides.size()));
    std::vector<int> dims(nb);
    for (int b = 0; b < nb; ++b) {
        dims[b] = overrides.empty() ? bp.vertex(b).lift_dim : overrides[b];
        if (bp.is_input(b)) {
            const int k = static_cast<int>(bp.names_of(b).size());
            if (!overrides.empty() && overrides[b] != k)
                throw ConfigError("input class " + std::to_string(b) + " has " + std::to_string(k) +
                                  " names but width " + std::to_string(overrides[b]) + " was requested");
            dims[b] = k;
        }
        if (dims[b] <= 0) throw ConfigError("class " + std::to_string(b) + " has zero width");
    }
    return dims;
}

std::vector<int> class_offsets(const Blueprint& bp, std::span<const int> dims) {
    std::vector<int> off(bp.num_vertices(), 0);
    int next = 0;
    for (int b : bp.graph().topological_order()) {
        off[b] = next;
        next += dims[b];
    }
    return off;
}

LiftedModule layered_lift(std::shared_ptr<const Blueprint> bp, std::span<const int> dims,
                          std::span<const ClassEdge> edges) {
    auto off = class_offsets(*bp, dims);
    int total = 0;
    for (int d : dims) total += d;
    std::vector<int> pi(total), names(total, -1);
    for (int b = 0; b < bp->num_vertices(); ++b)
        for (int i = 0; i < dims[b]; ++i) {
            pi[off[b] + i] = b;
            if (bp->is_input(b)) names[off[b] + i] = bp->names_of(b)[i];
        }
    std::vector<Edge> ge;
    ge.reserve(edges.size());
    for (const auto& ce : edges) {
        const Edge& be = bp->graph().edge(ce.base_edge);
        ge.push_back({off[be.src] + ce.i, off[be.dst] + ce.j});
    }
    return lift_module(bp, Graph::build(total, std::move(ge)), std::move(pi), std::move(names));
}

LiftedModule fully_connected_lift(std::shared_ptr<const Blueprint> bp, std::span<const int> dims_in) {
    auto dims = resolve_lift_dims(*bp, dims_in);
    std::vector<ClassEdge> edges;
    for (int e = 0; e < bp->num_edges(); ++e) {
        const Edge& be = bp->graph().edge(e);
        for (int i = 0; i < dims[be.src]; ++i)
            for (int j = 0; j < dims[be.dst]; ++j) edges.push_back({e, i, j});
    }
    return layered_lift(bp, dims, edges);
}

}  // namespace liftlab
