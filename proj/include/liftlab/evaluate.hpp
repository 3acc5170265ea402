#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "liftlab/bundle.hpp"
#include "liftlab/lifted_module.hpp"

namespace liftlab {

// Primitive invocation counts.
struct OpCounter {
    long long edge_calls = 0;
    long long vertex_calls = 0;
    long long total() const { return edge_calls + vertex_calls; }
};

// Offsets of the per-class pre-activation sums of every lifted vertex.
struct ClassSumLayout {
    explicit ClassSumLayout(const LiftedModule& lm);
    // Start of the sum for argument slot s of vertex v.
    int offset(int v, int s) const { return vertex_off[v] + slot_off[base[v]][s]; }
    int dim(int v, int s) const { return slot_off[base[v]][s + 1] - slot_off[base[v]][s]; }
    int slots(int v) const { return static_cast<int>(slot_off[base[v]].size()) - 1; }
    std::vector<int> vertex_off;
    std::vector<std::vector<int>> slot_off;
    std::vector<int> base;
    int total = 0;
};

// Values recorded by a forward pass: activations and the class sums fed to
// each sigma.
struct ForwardTape {
    Section act;
    std::vector<double> zsum;
    ClassSumLayout layout;

    std::vector<Vec> class_args(int v) const;
};

// Computes activations in topological order. Pre-activations within each
// parent class are summed in ascending parent id order. Throws ShapeMismatch
// when w or x do not live on the module's weight and input bundles.
ForwardTape forward(const LiftedModule& lm, const Section& w, const Section& x, OpCounter* counter = nullptr);

// Builds an input section from named vectors. Throws MissingInput when a name
// used by the lift is absent and ShapeMismatch on a wrong length.
Section make_inputs(const LiftedModule& lm, const std::map<std::string, std::vector<double>>& values);

// Readout coefficients a_{i,v} for i < k over terminal lifted vertices v.
// coeffs.at(t) holds a_{0,v}, ..., a_{k-1,v} for v = terminals()[t].
struct Readout {
    int k = 0;
    Section coeffs;
};

Readout zero_readout(const LiftedModule& lm, int k);

// out_i = sum over terminal classes b of |class b|^{-1/2} sum_{v over b} <a_{i,v}, f_v>.
std::vector<double> linear_readout(const LiftedModule& lm, const Readout& a, const Section& act);

// Concatenated activations of the terminal lifted vertices.
std::vector<double> terminal_outputs(const LiftedModule& lm, const Section& act);

struct Params {
    Section w;
    Readout a;
};

}  // namespace liftlab
