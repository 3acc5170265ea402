#include "fixtures.hpp"

#include <algorithm>
#include <numeric>

namespace fixtures {

using namespace liftlab;

std::shared_ptr<const Blueprint> share(Blueprint bp) { return std::make_shared<const Blueprint>(std::move(bp)); }

std::shared_ptr<const Blueprint> path_blueprint(const std::vector<int>& widths, const std::string& sigma,
                                                const std::string& last_sigma) {
    BlueprintSpec s;
    const int n = static_cast<int>(widths.size());
    for (int v = 0; v < n; ++v) {
        BaseVertexSpec bv;
        bv.label = "l" + std::to_string(v);
        bv.lift_dim = widths[v];
        bv.initial = v == 0;
        bv.terminal = v == n - 1;
        if (v > 0) bv.sigma.name = (v == n - 1 && !last_sigma.empty()) ? last_sigma : sigma;
        s.vertices.push_back(bv);
    }
    for (int v = 0; v + 1 < n; ++v) {
        BaseEdgeSpec e;
        e.src = v;
        e.dst = v + 1;
        e.m.name = "mul";
        e.lift_mode = LiftMode::Dense;
        s.edges.push_back(e);
    }
    return share(build_blueprint(s));
}

std::shared_ptr<const Blueprint> random_blueprint(std::mt19937_64& rng, int depth, const std::string& sigma) {
    BlueprintSpec s;
    std::vector<std::vector<int>> layers;
    auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
    std::uniform_int_distribution<int> one_two(1, 2);
    auto add_vertex = [&](bool initial) {
        BaseVertexSpec bv;
        bv.initial = initial;
        bv.label = "b" + std::to_string(s.vertices.size());
        if (!initial) bv.sigma.name = sigma;
        s.vertices.push_back(bv);
        return static_cast<int>(s.vertices.size()) - 1;
    };
    layers.push_back({});
    for (int k = one_two(rng); k > 0; --k) layers[0].push_back(add_vertex(true));
    for (int l = 1; l <= depth; ++l) {
        layers.push_back({});
        for (int k = one_two(rng); k > 0; --k) {
            int v = add_vertex(false);
            layers[l].push_back(v);
            std::vector<int> parents;
            for (int u : layers[l - 1])
                if (coin(0.7)) parents.push_back(u);
            if (parents.empty()) parents.push_back(layers[l - 1][std::uniform_int_distribution<int>(
                0, static_cast<int>(layers[l - 1].size()) - 1)(rng)]);
            for (int m = 0; m + 1 < l; ++m)
                for (int u : layers[m])
                    if (coin(0.2)) parents.push_back(u);
            for (int u : parents) {
                BaseEdgeSpec e;
                e.src = u;
                e.dst = v;
                e.m.name = "mul";
                s.edges.push_back(e);
            }
        }
    }
    std::vector<int> outdeg(s.vertices.size(), 0);
    for (const auto& e : s.edges) ++outdeg[e.src];
    for (size_t v = 0; v < s.vertices.size(); ++v)
        if (outdeg[v] == 0 && !s.vertices[v].initial) s.vertices[v].terminal = true;
    return share(build_blueprint(s));
}

Section random_section(const Bundle& b, std::mt19937_64& rng, double scale) {
    Section s(b);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (double& x : s.values) x = u(rng);
    return s;
}

Section random_inputs(const LiftedModule& lm, std::mt19937_64& rng, double scale) {
    return random_section(lm.input_bundle(), rng, scale);
}

Unfolding unfold(const LiftedModule& h, const Section& wh, std::mt19937_64& rng, int max_mult) {
    const Graph& hg = h.graph();
    std::vector<std::vector<int>> copies(h.num_vertices());
    std::vector<int> phi;  // before shuffling
    for (int v : hg.topological_order()) {
        const int m = h.is_input(v) ? 1 : std::uniform_int_distribution<int>(1, max_mult)(rng);
        for (int k = 0; k < m; ++k) {
            copies[v].push_back(static_cast<int>(phi.size()));
            phi.push_back(v);
        }
    }
    const int n = static_cast<int>(phi.size());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<Edge> edges;
    std::vector<int> edge_src_h;  // H edge id of each G edge, in creation order
    for (int v = 0; v < h.num_vertices(); ++v)
        for (int c : copies[v]) {
            auto ps = hg.parents(v);
            auto es = hg.in_edges(v);
            for (size_t k = 0; k < ps.size(); ++k) {
                const auto& pc = copies[ps[k]];
                int pick = pc[std::uniform_int_distribution<int>(0, static_cast<int>(pc.size()) - 1)(rng)];
                edges.push_back({perm[pick], perm[c]});
                edge_src_h.push_back(es[k]);
            }
        }
    std::vector<int> phi_g(n), pi_g(n), names_g(n);
    for (int old = 0; old < n; ++old) {
        phi_g[perm[old]] = phi[old];
        pi_g[perm[old]] = h.pi(phi[old]);
        names_g[perm[old]] = h.name(phi[old]);
    }
    Graph g = Graph::build(n, edges);
    Unfolding out{lift_module(h.blueprint_ptr(), g, pi_g, names_g), phi_g, Section()};
    out.w = Section(out.g.weight_bundle());
    for (size_t k = 0; k < edges.size(); ++k) {
        int id = g.find_edge(edges[k].src, edges[k].dst);
        auto src = wh.at(edge_src_h[k]);
        std::copy(src.begin(), src.end(), out.w.at(id).begin());
    }
    return out;
}

Embedding embed(const LiftedModule& h, const Section& wh, std::mt19937_64& rng, int extra, double weight_scale) {
    const Blueprint& bp = h.blueprint();
    std::vector<int> pi(h.projection().begin(), h.projection().end());
    std::vector<int> names(h.naming().begin(), h.naming().end());
    std::vector<std::vector<int>> members(bp.num_vertices());
    for (int v = 0; v < h.num_vertices(); ++v) members[h.pi(v)].push_back(v);
    std::vector<Edge> edges(h.graph().edges().begin(), h.graph().edges().end());
    for (int b : bp.graph().topological_order()) {
        if (bp.is_input(b)) continue;
        for (int k = 0; k < extra; ++k) {
            const int v = static_cast<int>(pi.size());
            pi.push_back(b);
            names.push_back(-1);
            for (int a : bp.graph().parents(b)) {
                auto& pool = members[a];
                if (pool.empty()) continue;
                std::vector<int> cand = pool;
                std::shuffle(cand.begin(), cand.end(), rng);
                const int d = std::uniform_int_distribution<int>(0, std::min<int>(2, static_cast<int>(cand.size())))(rng);
                for (int t = 0; t < d; ++t) edges.push_back({cand[t], v});
            }
            members[b].push_back(v);
        }
    }
    Graph g = Graph::build(static_cast<int>(pi.size()), edges);
    Embedding out{lift_module(h.blueprint_ptr(), g, pi, names), {}, Section()};
    out.inclusion.resize(h.num_vertices());
    std::iota(out.inclusion.begin(), out.inclusion.end(), 0);
    out.w = random_section(out.g.weight_bundle(), rng, weight_scale);
    for (int e = 0; e < h.num_edges(); ++e) {
        const Edge& he = h.graph().edge(e);
        auto src = wh.at(e);
        std::copy(src.begin(), src.end(), out.w.at(g.find_edge(he.src, he.dst)).begin());
    }
    return out;
}

}  // namespace fixtures
