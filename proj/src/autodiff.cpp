#include "liftlab/autodiff.hpp"

#include <cmath>

#include "liftlab/errors.hpp"

namespace liftlab {

void backward_activations(const LiftedModule& lm, const Section& w, const ForwardTape& tape, Section& ct_act,
                          Section& ct_w, OpCounter* counter) {
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    auto order = g.topological_order();
    std::vector<double> ct_z;
    std::vector<MutVec> ct_args;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        if (lm.is_input(v)) continue;
        const auto& L = tape.layout;
        const int nslots = L.slots(v);
        ct_z.assign(L.vertex_off[v + 1] - L.vertex_off[v], 0.0);
        ct_args.resize(nslots);
        for (int s = 0; s < nslots; ++s)
            ct_args[s] = MutVec(ct_z.data() + (L.offset(v, s) - L.vertex_off[v]), L.dim(v, s));
        auto args = tape.class_args(v);
        bp.sigma(lm.pi(v)).vjp(args, ct_act.at(v), ct_args);
        for (int e : g.in_edges(v)) {
            const int be = lm.base_edge(e);
            const int u = g.edge(e).src;
            bp.m(be).vjp(w.at(e), tape.act.at(u), ct_args[bp.parent_slot(be)], ct_w.at(e), ct_act.at(u));
        }
        if (counter) {
            counter->edge_calls += g.in_degree(v);
            counter->vertex_calls += 1;
        }
    }
}

void readout_vjp(const LiftedModule& lm, const Readout& a, const Section& act, std::span<const double> ct_out,
                 Section& ct_act, Readout* ct_a) {
    if (static_cast<int>(ct_out.size()) != a.k) throw ShapeMismatch("output cotangent has the wrong length");
    auto terms = lm.terminals();
    for (size_t t = 0; t < terms.size(); ++t) {
        const int v = terms[t];
        const double scale = 1.0 / std::sqrt(static_cast<double>(lm.class_size(lm.pi(v))));
        auto f = act.at(v);
        auto cf = ct_act.at(v);
        auto av = a.coeffs.at(static_cast<int>(t));
        const size_t d = f.size();
        for (int i = 0; i < a.k; ++i) {
            const double c = scale * ct_out[i];
            for (size_t j = 0; j < d; ++j) cf[j] += c * av[i * d + j];
            if (ct_a) {
                auto ca = ct_a->coeffs.at(static_cast<int>(t));
                for (size_t j = 0; j < d; ++j) ca[i * d + j] += c * f[j];
            }
        }
    }
}

Gradient backward(const LiftedModule& lm, const Params& p, const Section& x, std::span<const double> ct_out,
                  OpCounter* counter) {
    ForwardTape tape = forward(lm, p.w, x, counter);
    Gradient gr{Section(lm.weight_bundle()), Readout{p.a.k, Section(p.a.coeffs.bundle)},
                Section(lm.activation_bundle())};
    readout_vjp(lm, p.a, tape.act, ct_out, gr.act, &gr.a);
    backward_activations(lm, p.w, tape, gr.act, gr.w, counter);
    return gr;
}

Section jvp_activations(const LiftedModule& lm, const Section& w, const ForwardTape& tape, const Section& dw) {
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    const auto& L = tape.layout;
    Section dact(lm.activation_bundle());
    std::vector<double> dz(L.total, 0.0), tmp;
    std::vector<Vec> dargs;
    for (int v : g.topological_order()) {
        if (lm.is_input(v)) continue;
        for (int e : g.in_edges(v)) {
            const int be = lm.base_edge(e);
            const int u = g.edge(e).src;
            tmp.resize(bp.z_dim(be));
            bp.m(be).jvp(w.at(e), tape.act.at(u), dw.at(e), dact.at(u), tmp);
            double* z = dz.data() + L.offset(v, bp.parent_slot(be));
            for (size_t i = 0; i < tmp.size(); ++i) z[i] += tmp[i];
        }
        dargs.resize(L.slots(v));
        for (int s = 0; s < L.slots(v); ++s) dargs[s] = Vec(dz.data() + L.offset(v, s), L.dim(v, s));
        auto args = tape.class_args(v);
        bp.sigma(lm.pi(v)).jvp(args, dargs, dact.at(v));
    }
    return dact;
}

std::vector<double> jvp_forward(const LiftedModule& lm, const Params& p, const Section& x, const Params& tangent) {
    ForwardTape tape = forward(lm, p.w, x);
    Section dact = jvp_activations(lm, p.w, tape, tangent.w);
    auto a = linear_readout(lm, tangent.a, tape.act);
    auto b = linear_readout(lm, p.a, dact);
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

}  // namespace liftlab
