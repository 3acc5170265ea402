#include "liftlab/graph.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <sstream>

#include "liftlab/errors.hpp"

namespace liftlab {

namespace {

std::string join_ints(const std::vector<int>& xs, const char* sep = " -> ") {
    std::ostringstream os;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) os << sep;
        os << xs[i];
    }
    return os.str();
}

// Walks parent links inside the residual of Kahn's algorithm until a vertex
// repeats; every residual vertex has a residual parent, so this terminates.
std::vector<int> extract_cycle(int n, std::span<const Edge> edges,
                               const std::vector<int>& indeg) {
    std::vector<int> some_parent(n, -1);
    for (const Edge& e : edges)
        if (indeg[e.src] > 0 && indeg[e.dst] > 0 && some_parent[e.dst] < 0)
            some_parent[e.dst] = e.src;
    int start = -1;
    for (int v = 0; v < n; ++v)
        if (indeg[v] > 0) {
            start = v;
            break;
        }
    std::vector<int> pos(n, -1), walk;
    int v = start;
    while (pos[v] < 0) {
        pos[v] = static_cast<int>(walk.size());
        walk.push_back(v);
        v = some_parent[v];
    }
    std::vector<int> cycle(walk.begin() + pos[v], walk.end());
    std::reverse(cycle.begin(), cycle.end());
    return cycle;
}

}  // namespace

std::vector<int> topological_sort(int n, std::span<const Edge> edges) {
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> out(n);
    for (const Edge& e : edges) {
        ++indeg[e.dst];
        out[e.src].push_back(e.dst);
    }
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.push(v);
    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
        int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int w : out[v])
            if (--indeg[w] == 0) ready.push(w);
    }
    if (static_cast<int>(order.size()) != n) {
        auto cycle = extract_cycle(n, edges, indeg);
        auto closed = cycle;
        closed.push_back(cycle.front());
        throw CycleDetected(cycle, "graph contains a cycle: " + join_ints(closed));
    }
    return order;
}

Graph::Graph() {
    auto d = std::make_shared<Data>();
    d->in_off = {0};
    d->out_off = {0};
    d_ = d;
}

Graph Graph::build(int n, std::vector<Edge> edges) {
    if (n < 0) throw InvalidGraph("negative vertex count");
    for (const Edge& e : edges)
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
            throw InvalidGraph("edge (" + std::to_string(e.src) + ", " +
                               std::to_string(e.dst) + ") has an endpoint outside [0, " +
                               std::to_string(n) + ")");
    std::sort(edges.begin(), edges.end());
    for (size_t i = 1; i < edges.size(); ++i)
        if (edges[i] == edges[i - 1])
            throw InvalidGraph("duplicate edge (" + std::to_string(edges[i].src) + ", " +
                               std::to_string(edges[i].dst) + ")");

    auto d = std::make_shared<Data>();
    d->n = n;
    d->topo = topological_sort(n, edges);
    const int m = static_cast<int>(edges.size());

    d->in_off.assign(n + 1, 0);
    d->out_off.assign(n + 1, 0);
    for (const Edge& e : edges) {
        ++d->in_off[e.dst + 1];
        ++d->out_off[e.src + 1];
    }
    for (int v = 0; v < n; ++v) {
        d->in_off[v + 1] += d->in_off[v];
        d->out_off[v + 1] += d->out_off[v];
    }
    d->in_src.resize(m);
    d->in_eid.resize(m);
    d->out_dst.resize(m);
    std::vector<int> fill_in(d->in_off.begin(), d->in_off.end() - 1);
    // Edges are sorted by (src, dst), so scanning them in order fills each
    // parent list in ascending source order and each child list in ascending
    // destination order.
    for (int id = 0; id < m; ++id) {
        const Edge& e = edges[id];
        int k = fill_in[e.dst]++;
        d->in_src[k] = e.src;
        d->in_eid[k] = id;
        d->out_dst[d->out_off[e.src] + (id - d->out_off[e.src])] = e.dst;
    }
    d->edges = std::move(edges);
    Graph g;
    g.d_ = std::move(d);
    return g;
}

std::span<const int> Graph::parents(int v) const {
    return {d_->in_src.data() + d_->in_off[v], d_->in_src.data() + d_->in_off[v + 1]};
}

std::span<const int> Graph::in_edges(int v) const {
    return {d_->in_eid.data() + d_->in_off[v], d_->in_eid.data() + d_->in_off[v + 1]};
}

std::span<const int> Graph::children(int v) const {
    return {d_->out_dst.data() + d_->out_off[v], d_->out_dst.data() + d_->out_off[v + 1]};
}

std::pair<int, int> Graph::out_edge_range(int v) const {
    return {d_->out_off[v], d_->out_off[v + 1]};
}

int Graph::find_edge(int u, int v) const {
    if (u < 0 || u >= d_->n) return -1;
    auto ch = children(u);
    auto it = std::lower_bound(ch.begin(), ch.end(), v);
    if (it == ch.end() || *it != v) return -1;
    return d_->out_off[u] + static_cast<int>(it - ch.begin());
}

bool operator==(const Graph& a, const Graph& b) {
    if (a.same_storage(b)) return true;
    return a.num_vertices() == b.num_vertices() &&
           std::equal(a.edges().begin(), a.edges().end(), b.edges().begin(), b.edges().end());
}

namespace {

void check_map_shape(const VertexMap& f) {
    if (static_cast<int>(f.image.size()) != f.source.num_vertices())
        throw IndexMismatch("vertex map has " + std::to_string(f.image.size()) +
                            " entries for a source with " +
                            std::to_string(f.source.num_vertices()) + " vertices");
    for (size_t v = 0; v < f.image.size(); ++v)
        if (f.image[v] < 0 || f.image[v] >= f.target.num_vertices())
            throw IndexMismatch("vertex " + std::to_string(v) + " maps to " +
                                std::to_string(f.image[v]) + ", outside the target");
}

}  // namespace

void validate_homomorphism(const VertexMap& f) { (void)edge_images(f); }

std::vector<int> edge_images(const VertexMap& f) {
    check_map_shape(f);
    std::vector<int> out(f.source.num_edges());
    for (int e = 0; e < f.source.num_edges(); ++e) {
        const Edge& ed = f.source.edge(e);
        int t = f.target.find_edge(f.image[ed.src], f.image[ed.dst]);
        if (t < 0)
            throw NotAHomomorphism("edge (" + std::to_string(ed.src) + ", " +
                                   std::to_string(ed.dst) + ") maps to (" +
                                   std::to_string(f.image[ed.src]) + ", " +
                                   std::to_string(f.image[ed.dst]) +
                                   "), which is not an edge of the target");
        out[e] = t;
    }
    return out;
}

std::string FibrationReport::describe() const {
    if (ok()) return "fibration";
    std::ostringstream os;
    for (const auto& v : violations) {
        os << "vertex " << v.vertex << ":";
        if (!v.missing.empty()) os << " missing parent images {" << join_ints(v.missing, ", ") << "}";
        if (!v.duplicated.empty())
            os << " duplicated parent images {" << join_ints(v.duplicated, ", ") << "}";
        os << "\n";
    }
    return os.str();
}

FibrationReport validate_fibration(const VertexMap& f) {
    validate_homomorphism(f);
    FibrationReport rep;
    std::vector<int> hits(f.target.num_vertices(), 0);
    for (int v = 0; v < f.source.num_vertices(); ++v) {
        auto tp = f.target.parents(f.image[v]);
        for (int p : f.source.parents(v)) ++hits[f.image[p]];
        FibrationViolation viol;
        viol.vertex = v;
        for (int t : tp) {
            if (hits[t] == 0) viol.missing.push_back(t);
            if (hits[t] > 1) viol.duplicated.push_back(t);
        }
        for (int p : f.source.parents(v)) hits[f.image[p]] = 0;
        if (!viol.missing.empty() || !viol.duplicated.empty())
            rep.violations.push_back(std::move(viol));
    }
    return rep;
}

VertexMap compose_maps(const VertexMap& f, const VertexMap& g) {
    if (!(f.target == g.source))
        throw DomainMismatch("cannot compose: the first map's target is not the second map's source");
    check_map_shape(f);
    check_map_shape(g);
    VertexMap h{f.source, g.target, std::vector<int>(f.image.size())};
    for (size_t v = 0; v < f.image.size(); ++v) h.image[v] = g.image[f.image[v]];
    return h;
}

VertexMap identity_map(const Graph& g) {
    VertexMap m{g, g, std::vector<int>(g.num_vertices())};
    for (int v = 0; v < g.num_vertices(); ++v) m.image[v] = v;
    return m;
}

Graph read_edge_list(std::istream& in, int num_vertices) {
    std::vector<Edge> edges;
    int max_id = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<long long> nums;
        std::string tok;
        while (ls >> tok) {
            try {
                size_t used = 0;
                long long x = std::stoll(tok, &used);
                if (used != tok.size() || x < 0 || x > 1'000'000'000) throw std::invalid_argument(tok);
                nums.push_back(x);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(lineno) + ": bad vertex id '" + tok + "'");
            }
        }
        if (nums.empty()) continue;
        if (nums.size() > 2)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'u v'");
        for (long long x : nums) max_id = std::max<int>(max_id, static_cast<int>(x));
        if (nums.size() == 2) edges.push_back({static_cast<int>(nums[0]), static_cast<int>(nums[1])});
    }
    int n = num_vertices >= 0 ? num_vertices : max_id + 1;
    return Graph::build(n, std::move(edges));
}

Graph load_edge_list(const std::string& path, int num_vertices) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_edge_list(in, num_vertices);
}

void write_edge_list(std::ostream& out, const Graph& g) {
    std::vector<char> touched(g.num_vertices(), 0);
    for (const Edge& e : g.edges()) {
        out << e.src << ' ' << e.dst << '\n';
        touched[e.src] = touched[e.dst] = 1;
    }
    for (int v = 0; v < g.num_vertices(); ++v)
        if (!touched[v]) out << v << '\n';
}

}  // namespace liftlab
