#include "liftlab/blueprint.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "liftlab/errors.hpp"

namespace liftlab {

using nlohmann::json;

std::string ValidationReport::describe() const {
    std::ostringstream os;
    for (const auto& e : errors) os << "error: " << e << "\n";
    for (const auto& w : warnings) os << "warning: " << w << "\n";
    return os.str();
}

int Blueprint::find_name(const std::string& name) const {
    for (size_t i = 0; i < names_.size(); ++i)
        if (names_[i].name == name) return static_cast<int>(i);
    return -1;
}

bool Blueprint::smooth() const {
    for (const auto& s : sigma_)
        if (s && !s->smooth()) return false;
    for (const auto& m : m_)
        if (!m->smooth()) return false;
    return true;
}

namespace {

std::string vlabel(const BlueprintSpec& s, int v) {
    std::string out = "vertex " + std::to_string(v);
    if (v >= 0 && v < static_cast<int>(s.vertices.size()) && !s.vertices[v].label.empty())
        out += " (" + s.vertices[v].label + ")";
    return out;
}

std::string elabel(const BaseEdgeSpec& e) {
    return "edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) + ")";
}

// Name list with defaults filled in for initial vertices that have none.
std::vector<InputName> resolve_names(const BlueprintSpec& s) {
    std::vector<InputName> names = s.inputs;
    std::set<int> named;
    for (const auto& n : s.inputs) named.insert(n.vertex);
    for (int v = 0; v < static_cast<int>(s.vertices.size()); ++v) {
        const auto& bv = s.vertices[v];
        if (!bv.initial || named.count(v)) continue;
        const std::string base = bv.label.empty() ? "v" + std::to_string(v) : bv.label;
        for (int i = 0; i < bv.lift_dim; ++i) names.push_back({base + ":" + std::to_string(i), v});
    }
    return names;
}

struct Built {
    ValidationReport report;
    Graph graph;
    std::vector<int> edge_order;  // spec edge index for each graph edge id
    std::vector<std::shared_ptr<const EdgeOp>> m;
    std::vector<std::shared_ptr<const VertexOp>> sigma;
};

Built check(const BlueprintSpec& s) {
    Built b;
    auto& rep = b.report;
    const int n = static_cast<int>(s.vertices.size());
    std::vector<Edge> edges;
    for (const auto& e : s.edges) edges.push_back({e.src, e.dst});
    try {
        b.graph = Graph::build(n, edges);
    } catch (const Error& err) {
        rep.errors.push_back(std::string("base graph: ") + err.what());
        return b;
    }
    b.edge_order.assign(b.graph.num_edges(), -1);
    for (size_t i = 0; i < s.edges.size(); ++i)
        b.edge_order[b.graph.find_edge(s.edges[i].src, s.edges[i].dst)] = static_cast<int>(i);

    for (int v = 0; v < n; ++v) {
        const auto& bv = s.vertices[v];
        if (bv.y_dim < 0) rep.errors.push_back(vlabel(s, v) + ": negative y_dim");
        if (bv.y_dim == 0) rep.warnings.push_back(vlabel(s, v) + ": zero-dimensional Y");
        if (bv.lift_dim < 0) rep.errors.push_back(vlabel(s, v) + ": negative lift_dim");
        if (bv.initial && !b.graph.is_initial(v))
            rep.errors.push_back(vlabel(s, v) + ": initial vertex has parents");
    }

    b.m.resize(b.graph.num_edges());
    for (int id = 0; id < b.graph.num_edges(); ++id) {
        const auto& e = s.edges[b.edge_order[id]];
        if (e.w_dim < 0 || e.z_dim < 0) rep.errors.push_back(elabel(e) + ": negative dimension");
        if (e.z_dim == 0) rep.warnings.push_back(elabel(e) + ": zero-dimensional Z");
        if (e.lift_mode == LiftMode::Sparse && !(e.lambda > 0))
            rep.errors.push_back(elabel(e) + ": lambda must be positive");
        if (!(e.init_scale >= 0)) rep.errors.push_back(elabel(e) + ": init scale must be non-negative");
        try {
            b.m[id] = make_edge_op(e.m.name, e.m.params);
            auto why = b.m[id]->check_signature(e.w_dim, s.vertices[e.src].y_dim, e.z_dim);
            if (!why.empty()) rep.errors.push_back(elabel(e) + ": " + e.m.name + " " + why);
        } catch (const UnknownPrimitive& err) {
            rep.errors.push_back(elabel(e) + ": " + err.what());
        }
    }

    b.sigma.resize(n);
    for (int v = 0; v < n; ++v) {
        const auto& bv = s.vertices[v];
        if (bv.initial) continue;
        if (bv.sigma.name.empty()) {
            rep.errors.push_back(vlabel(s, v) + ": non-initial vertex has no sigma");
            continue;
        }
        try {
            b.sigma[v] = make_vertex_op(bv.sigma.name, bv.sigma.params);
        } catch (const UnknownPrimitive& err) {
            rep.errors.push_back(vlabel(s, v) + ": " + err.what());
            continue;
        }
        std::vector<int> cd;
        for (int id : b.graph.in_edges(v)) cd.push_back(s.edges[b.edge_order[id]].z_dim);
        auto why = b.sigma[v]->check_signature(cd, bv.y_dim);
        if (!why.empty()) rep.errors.push_back(vlabel(s, v) + ": " + bv.sigma.name + " " + why);
    }

    std::set<std::string> seen;
    for (const auto& nm : s.inputs) {
        if (!seen.insert(nm.name).second) rep.errors.push_back("input name '" + nm.name + "' is repeated");
        if (nm.vertex < 0 || nm.vertex >= n || !s.vertices[nm.vertex].initial)
            rep.errors.push_back("input name '" + nm.name + "' is attached to a non-initial vertex");
    }
    bool any_terminal = false;
    for (const auto& bv : s.vertices) any_terminal |= bv.terminal;
    if (!any_terminal) rep.warnings.push_back("no terminal vertices");
    return b;
}

}  // namespace

ValidationReport validate_blueprint(const BlueprintSpec& spec) { return check(spec).report; }

Blueprint build_blueprint(BlueprintSpec spec) {
    Built b = check(spec);
    if (!b.report.ok()) {
        std::string msg = "invalid blueprint:";
        for (const auto& e : b.report.errors) msg += "\n  " + e;
        throw ValidationError(msg);
    }
    Blueprint bp;
    bp.graph_ = b.graph;
    bp.vertices_ = spec.vertices;
    for (int id = 0; id < b.graph.num_edges(); ++id) bp.edges_.push_back(spec.edges[b.edge_order[id]]);
    for (int v = 0; v < bp.graph_.num_vertices(); ++v) {
        if (bp.vertices_[v].initial) bp.initial_.push_back(v);
        if (bp.vertices_[v].terminal) bp.terminal_.push_back(v);
    }
    bp.m_ = std::move(b.m);
    bp.sigma_ = std::move(b.sigma);
    bp.slot_.resize(bp.graph_.num_edges());
    for (int v = 0; v < bp.graph_.num_vertices(); ++v) {
        auto ins = bp.graph_.in_edges(v);
        for (size_t k = 0; k < ins.size(); ++k) bp.slot_[ins[k]] = static_cast<int>(k);
    }
    bp.names_ = resolve_names(spec);
    bp.names_of_.assign(bp.graph_.num_vertices(), {});
    for (size_t i = 0; i < bp.names_.size(); ++i) bp.names_of_[bp.names_[i].vertex].push_back(static_cast<int>(i));
    bp.spec_ = std::move(spec);
    return bp;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ParseError(path + ": " + what);
}

template <class T>
T get_or(const json& j, const std::string& key, T def, const std::string& path) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(path + "/" + key, e.what());
    }
}

PrimitiveSpec parse_primitive(const json& j, const std::string& path) {
    PrimitiveSpec p;
    if (j.is_string()) {
        p.name = j.get<std::string>();
    } else if (j.is_object()) {
        if (!j.contains("name")) fail(path, "missing 'name'");
        p.name = get_or<std::string>(j, "name", "", path);
        if (j.contains("params")) p.params = j.at("params");
    } else {
        fail(path, "expected a primitive name or {name, params}");
    }
    return p;
}

}  // namespace

BlueprintSpec parse_blueprint(const json& j) {
    BlueprintSpec s;
    if (!j.is_object()) fail("", "blueprint must be a JSON object");
    if (!j.contains("vertices") || !j.at("vertices").is_array()) fail("/vertices", "missing array");
    const auto& vs = j.at("vertices");
    s.vertices.resize(vs.size());
    std::vector<char> filled(vs.size(), 0);
    for (size_t i = 0; i < vs.size(); ++i) {
        const std::string path = "/vertices/" + std::to_string(i);
        const json& v = vs[i];
        if (!v.is_object()) fail(path, "expected an object");
        int id = get_or<int>(v, "id", static_cast<int>(i), path);
        if (id < 0 || id >= static_cast<int>(vs.size()) || filled[id])
            fail(path + "/id", "vertex ids must be distinct and in [0, " + std::to_string(vs.size()) + ")");
        filled[id] = 1;
        auto& bv = s.vertices[id];
        bv.label = get_or<std::string>(v, "label", "", path);
        bv.y_dim = get_or<int>(v, "y_dim", 1, path);
        bv.initial = get_or<bool>(v, "initial", false, path);
        bv.terminal = get_or<bool>(v, "terminal", false, path);
        bv.lift_dim = get_or<int>(v, "lift_dim", 1, path);
        if (v.contains("sigma") && !v.at("sigma").is_null()) bv.sigma = parse_primitive(v.at("sigma"), path + "/sigma");
    }
    if (j.contains("edges")) {
        const auto& es = j.at("edges");
        if (!es.is_array()) fail("/edges", "expected an array");
        for (size_t i = 0; i < es.size(); ++i) {
            const std::string path = "/edges/" + std::to_string(i);
            const json& e = es[i];
            if (!e.is_object()) fail(path, "expected an object");
            if (!e.contains("src") || !e.contains("dst")) fail(path, "missing 'src' or 'dst'");
            if (!e.contains("m")) fail(path, "missing 'm'");
            BaseEdgeSpec be;
            be.src = get_or<int>(e, "src", 0, path);
            be.dst = get_or<int>(e, "dst", 0, path);
            be.w_dim = get_or<int>(e, "w_dim", 1, path);
            be.z_dim = get_or<int>(e, "z_dim", 1, path);
            be.m = parse_primitive(e.at("m"), path + "/m");
            if (e.contains("lift")) {
                const json& l = e.at("lift");
                const std::string mode = get_or<std::string>(l, "mode", "sparse", path + "/lift");
                if (mode == "dense") be.lift_mode = LiftMode::Dense;
                else if (mode == "sparse") be.lift_mode = LiftMode::Sparse;
                else fail(path + "/lift/mode", "expected 'dense' or 'sparse'");
                be.lambda = get_or<double>(l, "lambda", 1.0, path + "/lift");
            }
            if (e.contains("init")) {
                be.init_mean = get_or<double>(e.at("init"), "mean", 0.0, path + "/init");
                be.init_scale = get_or<double>(e.at("init"), "scale", 1.0, path + "/init");
            }
            s.edges.push_back(be);
        }
    }
    if (j.contains("inputs")) {
        const auto& in = j.at("inputs");
        if (in.is_object()) {
            for (auto it = in.begin(); it != in.end(); ++it) {
                if (!it.value().is_number_integer()) fail("/inputs/" + it.key(), "expected a vertex id");
                s.inputs.push_back({it.key(), it.value().get<int>()});
            }
        } else if (in.is_array()) {
            for (size_t i = 0; i < in.size(); ++i) {
                const std::string path = "/inputs/" + std::to_string(i);
                if (!in[i].contains("name") || !in[i].contains("vertex")) fail(path, "expected {name, vertex}");
                s.inputs.push_back({get_or<std::string>(in[i], "name", "", path), get_or<int>(in[i], "vertex", 0, path)});
            }
        } else {
            fail("/inputs", "expected an object or an array");
        }
    }
    return s;
}

json blueprint_to_json(const BlueprintSpec& s) {
    json j;
    j["vertices"] = json::array();
    for (size_t v = 0; v < s.vertices.size(); ++v) {
        const auto& bv = s.vertices[v];
        json o{{"id", v}, {"y_dim", bv.y_dim}, {"lift_dim", bv.lift_dim}};
        if (!bv.label.empty()) o["label"] = bv.label;
        if (bv.initial) o["initial"] = true;
        if (bv.terminal) o["terminal"] = true;
        if (!bv.sigma.name.empty()) o["sigma"] = {{"name", bv.sigma.name}, {"params", bv.sigma.params}};
        j["vertices"].push_back(o);
    }
    j["edges"] = json::array();
    for (const auto& e : s.edges) {
        json o{{"src", e.src}, {"dst", e.dst}, {"w_dim", e.w_dim}, {"z_dim", e.z_dim},
               {"m", {{"name", e.m.name}, {"params", e.m.params}}}};
        o["lift"] = {{"mode", e.lift_mode == LiftMode::Dense ? "dense" : "sparse"}, {"lambda", e.lambda}};
        if (e.init_mean != 0.0 || e.init_scale != 1.0) o["init"] = {{"mean", e.init_mean}, {"scale", e.init_scale}};
        j["edges"].push_back(o);
    }
    j["inputs"] = json::array();
    for (const auto& n : s.inputs) j["inputs"].push_back({{"name", n.name}, {"vertex", n.vertex}});
    return j;
}

Blueprint load_blueprint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return build_blueprint(parse_blueprint(j));
}

}  // namespace liftlab
