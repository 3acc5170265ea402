#include "liftlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "liftlab/errors.hpp"

namespace liftlab {

bool BatchKernel::supports(const LiftedModule& lm, std::string* why) {
    const Blueprint& bp = lm.blueprint();
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    for (int b = 0; b < bp.num_vertices(); ++b) {
        if (bp.y_dim(b) != 1) return fail("vertex " + std::to_string(b) + " is not scalar");
        if (bp.is_input(b)) continue;
        const std::string n = bp.sigma(b).name();
        if (n != "sum_identity" && n != "add" && n != "sum_relu" && n != "sum_tanh" && n != "sum_sin" && n != "one" &&
            n != "sqrt_bias_readout")
            return fail("vertex primitive " + n + " has no compiled form");
    }
    for (int e = 0; e < bp.num_edges(); ++e) {
        const std::string n = bp.m(e).name();
        if (n != "mul" && n != "scale" && n != "pair_mul") return fail("edge primitive " + n + " has no compiled form");
    }
    return true;
}

BatchKernel::BatchKernel(const LiftedModule& lm) {
    std::string why;
    if (!supports(lm, &why)) throw Unsupported(why);
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    std::vector<int> index(lm.num_vertices());
    auto order = g.topological_order();
    for (size_t k = 0; k < order.size(); ++k) index[order[k]] = static_cast<int>(k);
    vs_.resize(order.size());
    for (size_t k = 0; k < order.size(); ++k) {
        const int v = order[k];
        const int b = lm.pi(v);
        Vertex& cv = vs_[k];
        cv.in_begin = static_cast<int>(in_.size());
        if (bp.is_input(b)) {
            cv.op = VOp::Input;
            cv.input_col = lm.input_bundle().offset(lm.name(v));
            cv.in_end = cv.in_begin;
            continue;
        }
        const std::string n = bp.sigma(b).name();
        cv.op = n == "sum_relu"            ? VOp::Relu
                : n == "sum_tanh"          ? VOp::Tanh
                : n == "sum_sin"           ? VOp::Sin
                : n == "one"               ? VOp::One
                : n == "sqrt_bias_readout" ? VOp::SqrtBias
                                           : VOp::Identity;
        cv.slots = bp.graph().in_degree(b);
        cv.zoff = zs_total_;
        zs_total_ += cv.slots;
        for (int e : bp.graph().in_edges(b))
            if (bp.z_dim(e) == 2) cv.pair_slot = bp.parent_slot(e);
        for (int e : g.in_edges(v)) {
            const int be = lm.base_edge(e);
            in_.push_back({index[g.edge(e).src], e, bp.parent_slot(be)});
            if (bp.parent_slot(be) == cv.pair_slot) cv.count += 1;
        }
        cv.in_end = static_cast<int>(in_.size());
    }
    for (int v : lm.terminals()) terminals_.push_back(index[v]);
}

void BatchKernel::reserve(KernelWorkspace& ws, int nb) const {
    if (ws.capacity >= nb && ws.act.size() == vs_.size() * static_cast<size_t>(ws.capacity)) return;
    ws.capacity = std::max(nb, 1);
    ws.act.assign(vs_.size() * ws.capacity, 0.0);
    ws.ct_act.assign(vs_.size() * ws.capacity, 0.0);
    ws.zs.assign(static_cast<size_t>(zs_total_) * ws.capacity, 0.0);
    ws.ct_zs.assign(static_cast<size_t>(zs_total_) * ws.capacity, 0.0);
}

void BatchKernel::forward(std::span<const double> w, const double* const* rows, int nb, KernelWorkspace& ws) const {
    reserve(ws, nb);
    const size_t cap = ws.capacity;
    double* act = ws.act.data();
    double* zs = ws.zs.data();
    for (size_t k = 0; k < vs_.size(); ++k) {
        const Vertex& cv = vs_[k];
        double* out = act + k * cap;
        if (cv.op == VOp::Input) {
            for (int b = 0; b < nb; ++b) out[b] = rows[b][cv.input_col];
            continue;
        }
        double* z = zs + static_cast<size_t>(cv.zoff) * cap;
        std::fill(z, z + static_cast<size_t>(cv.slots) * cap, 0.0);
        for (int q = cv.in_begin; q < cv.in_end; ++q) {
            const InEdge& ie = in_[q];
            const double we = w[ie.edge];
            const double* src = act + static_cast<size_t>(ie.src) * cap;
            double* zz = z + static_cast<size_t>(ie.slot) * cap;
#pragma omp simd
            for (int b = 0; b < nb; ++b) zz[b] += we * src[b];
        }
        switch (cv.op) {
            case VOp::One:
                std::fill(out, out + nb, 1.0);
                break;
            case VOp::SqrtBias: {
                const double* zp = z + static_cast<size_t>(cv.pair_slot) * cap;
                const double root = std::sqrt(cv.count);
                for (int b = 0; b < nb; ++b) out[b] = cv.count > 0 ? zp[b] / root : 0.0;
                for (int s = 0; s < cv.slots; ++s) {
                    if (s == cv.pair_slot) continue;
                    const double* zb = z + static_cast<size_t>(s) * cap;
                    for (int b = 0; b < nb; ++b) out[b] += zb[b];
                }
                break;
            }
            default: {
                for (int b = 0; b < nb; ++b) {
                    double t = 0.0;
                    for (int s = 0; s < cv.slots; ++s) t += z[static_cast<size_t>(s) * cap + b];
                    switch (cv.op) {
                        case VOp::Relu: out[b] = t > 0 ? t : 0.0; break;
                        case VOp::Tanh: out[b] = std::tanh(t); break;
                        case VOp::Sin: out[b] = std::sin(t); break;
                        default: out[b] = t; break;
                    }
                }
            }
        }
    }
}

void BatchKernel::backward(std::span<const double> w, KernelWorkspace& ws, int nb, const double* ct_terminal,
                           std::span<double> grad_w) const {
    const size_t cap = ws.capacity;
    const double* act = ws.act.data();
    const double* zs = ws.zs.data();
    double* ct = ws.ct_act.data();
    double* ctz = ws.ct_zs.data();
    std::fill(ws.ct_act.begin(), ws.ct_act.begin() + vs_.size() * cap, 0.0);
    for (size_t t = 0; t < terminals_.size(); ++t) {
        double* c = ct + static_cast<size_t>(terminals_[t]) * cap;
        for (int b = 0; b < nb; ++b) c[b] += ct_terminal[t * nb + b];
    }
    for (size_t k = vs_.size(); k-- > 0;) {
        const Vertex& cv = vs_[k];
        if (cv.op == VOp::Input || cv.op == VOp::One) continue;
        const double* cy = ct + k * cap;
        const double* z = zs + static_cast<size_t>(cv.zoff) * cap;
        double* cz = ctz + static_cast<size_t>(cv.zoff) * cap;
        if (cv.op == VOp::SqrtBias) {
            for (int s = 0; s < cv.slots; ++s) {
                double* c = cz + static_cast<size_t>(s) * cap;
                if (s == cv.pair_slot)
                    for (int b = 0; b < nb; ++b) c[b] = cv.count > 0 ? cy[b] / std::sqrt(cv.count) : 0.0;
                else
                    for (int b = 0; b < nb; ++b) c[b] = cy[b];
            }
        } else {
            const double* y = act + k * cap;
            for (int b = 0; b < nb; ++b) {
                double d = 1.0;
                if (cv.op != VOp::Identity) {
                    double t = 0.0;
                    for (int s = 0; s < cv.slots; ++s) t += z[static_cast<size_t>(s) * cap + b];
                    switch (cv.op) {
                        case VOp::Relu: d = t > 0 ? 1.0 : 0.0; break;
                        case VOp::Tanh: d = 1.0 - y[b] * y[b]; break;
                        case VOp::Sin: d = std::cos(t); break;
                        default: break;
                    }
                }
                const double g = cy[b] * d;
                for (int s = 0; s < cv.slots; ++s) cz[static_cast<size_t>(s) * cap + b] = g;
            }
        }
        for (int q = cv.in_begin; q < cv.in_end; ++q) {
            const InEdge& ie = in_[q];
            const double we = w[ie.edge];
            const double* src = act + static_cast<size_t>(ie.src) * cap;
            const double* c = cz + static_cast<size_t>(ie.slot) * cap;
            double* csrc = ct + static_cast<size_t>(ie.src) * cap;
            double gw = 0.0;
#pragma omp simd reduction(+ : gw)
            for (int b = 0; b < nb; ++b) {
                gw += c[b] * src[b];
                csrc[b] += we * c[b];
            }
            grad_w[ie.edge] += gw;
        }
    }
}

}  // namespace liftlab
