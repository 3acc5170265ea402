#include "liftlab/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "liftlab/errors.hpp"

namespace liftlab {

ClassSumLayout::ClassSumLayout(const LiftedModule& lm) {
    const Blueprint& bp = lm.blueprint();
    slot_off.resize(bp.num_vertices());
    for (int b = 0; b < bp.num_vertices(); ++b) {
        auto& so = slot_off[b];
        so.push_back(0);
        for (int e : bp.graph().in_edges(b)) so.push_back(so.back() + bp.z_dim(e));
    }
    base.assign(lm.projection().begin(), lm.projection().end());
    vertex_off.resize(lm.num_vertices() + 1);
    int off = 0;
    for (int v = 0; v < lm.num_vertices(); ++v) {
        vertex_off[v] = off;
        if (!lm.is_input(v)) off += slot_off[base[v]].back();
    }
    vertex_off[lm.num_vertices()] = off;
    total = off;
}

std::vector<Vec> ForwardTape::class_args(int v) const {
    std::vector<Vec> out(layout.slots(v));
    for (int s = 0; s < layout.slots(v); ++s)
        out[s] = Vec(zsum.data() + layout.offset(v, s), layout.dim(v, s));
    return out;
}

ForwardTape forward(const LiftedModule& lm, const Section& w, const Section& x, OpCounter* counter) {
    if (!(w.bundle == lm.weight_bundle())) throw ShapeMismatch("weights do not match the lifted edge bundle");
    if (!(x.bundle == lm.input_bundle())) throw ShapeMismatch("inputs do not match the name bundle");
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    ForwardTape tape{Section(lm.activation_bundle()), {}, ClassSumLayout(lm)};
    tape.zsum.assign(tape.layout.total, 0.0);
    std::vector<double> tmp;
    std::vector<Vec> args;
    for (int v : g.topological_order()) {
        if (lm.is_input(v)) {
            auto src = x.at(lm.name(v));
            std::copy(src.begin(), src.end(), tape.act.at(v).begin());
            continue;
        }
        for (int e : g.in_edges(v)) {
            const int be = lm.base_edge(e);
            const int s = bp.parent_slot(be);
            tmp.resize(bp.z_dim(be));
            bp.m(be).eval(w.at(e), tape.act.at(g.edge(e).src), tmp);
            double* z = tape.zsum.data() + tape.layout.offset(v, s);
            for (size_t i = 0; i < tmp.size(); ++i) z[i] += tmp[i];
        }
        args = tape.class_args(v);
        bp.sigma(lm.pi(v)).eval(args, tape.act.at(v));
        if (counter) {
            counter->edge_calls += g.in_degree(v);
            counter->vertex_calls += 1;
        }
    }
    return tape;
}

Section make_inputs(const LiftedModule& lm, const std::map<std::string, std::vector<double>>& values) {
    const Blueprint& bp = lm.blueprint();
    Section x(lm.input_bundle());
    for (int c = 0; c < bp.num_names(); ++c) {
        const auto& nm = bp.names()[c].name;
        auto it = values.find(nm);
        if (it == values.end()) {
            if (lm.vertex_of_name(c) >= 0) throw MissingInput("no value for input '" + nm + "'");
            continue;
        }
        if (static_cast<int>(it->second.size()) != x.bundle.dim(c))
            throw ShapeMismatch("input '" + nm + "' has length " + std::to_string(it->second.size()) +
                                ", expected " + std::to_string(x.bundle.dim(c)));
        std::copy(it->second.begin(), it->second.end(), x.at(c).begin());
    }
    return x;
}

Readout zero_readout(const LiftedModule& lm, int k) {
    std::vector<int> dims;
    for (int v : lm.terminals()) dims.push_back(k * lm.y_dim(v));
    return Readout{k, Section(Bundle(std::move(dims)))};
}

std::vector<double> linear_readout(const LiftedModule& lm, const Readout& a, const Section& act) {
    std::vector<double> out(a.k, 0.0);
    auto terms = lm.terminals();
    for (size_t t = 0; t < terms.size(); ++t) {
        const int v = terms[t];
        const double scale = 1.0 / std::sqrt(static_cast<double>(lm.class_size(lm.pi(v))));
        auto f = act.at(v);
        auto av = a.coeffs.at(static_cast<int>(t));
        const size_t d = f.size();
        for (int i = 0; i < a.k; ++i) {
            double s = 0;
            for (size_t j = 0; j < d; ++j) s += av[i * d + j] * f[j];
            out[i] += scale * s;
        }
    }
    return out;
}

std::vector<double> terminal_outputs(const LiftedModule& lm, const Section& act) {
    std::vector<double> out;
    for (int v : lm.terminals()) {
        auto f = act.at(v);
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

}  // namespace liftlab
