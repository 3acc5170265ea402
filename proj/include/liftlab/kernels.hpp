#pragma once

#include <span>
#include <vector>

#include "liftlab/lifted_module.hpp"

namespace liftlab {

// Scratch buffers for one batch chunk, laid out vertex-major so the inner
// loops run over contiguous samples.
struct KernelWorkspace {
    int capacity = 0;
    std::vector<double> act, zs, ct_act, ct_zs;
};

// Compiled evaluator for scalar lifts: every activation is one-dimensional,
// edges use "mul", "scale" (scalar) or "pair_mul", vertices use the summing
// activations, "one" or "sqrt_bias_readout". Covers the experiment blueprints
// and computes the same sums in the same order as the generic interpreter.
class BatchKernel {
public:
    explicit BatchKernel(const LiftedModule& lm);  // throws Unsupported
    static bool supports(const LiftedModule& lm, std::string* why = nullptr);

    int num_terminals() const { return static_cast<int>(terminals_.size()); }

    void reserve(KernelWorkspace& ws, int nb) const;

    // rows[b] points at sample b laid out like the module's input bundle.
    void forward(std::span<const double> w, const double* const* rows, int nb, KernelWorkspace& ws) const;

    // Activation of terminal t for sample b after forward.
    double terminal(const KernelWorkspace& ws, int t, int b) const {
        return ws.act[static_cast<size_t>(terminals_[t]) * ws.capacity + b];
    }

    // ct_terminal[t * nb + b] is the cotangent of terminal t for sample b.
    // Weight gradients are accumulated into grad_w.
    void backward(std::span<const double> w, KernelWorkspace& ws, int nb, const double* ct_terminal,
                  std::span<double> grad_w) const;

private:
    enum class VOp { Input, Identity, Relu, Tanh, Sin, One, SqrtBias };
    struct InEdge {
        int src;   // compiled vertex index
        int edge;  // lifted edge id
        int slot;
    };
    struct Vertex {
        VOp op;
        int input_col = -1;
        int slots = 0;
        int zoff = 0;
        int pair_slot = -1;
        double count = 0;  // number of pair_mul in-edges for SqrtBias
        int in_begin = 0, in_end = 0;
    };
    std::vector<Vertex> vs_;       // in topological order
    std::vector<InEdge> in_;
    std::vector<int> terminals_;   // compiled indices of lm.terminals()
    int zs_total_ = 0;
};

}  // namespace liftlab
