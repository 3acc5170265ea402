#pragma once

#include <span>
#include <vector>

#include "liftlab/evaluate.hpp"

namespace liftlab {

struct Gradient {
    Section w;    // over lifted edges
    Readout a;    // same layout as the readout coefficients
    Section act;  // cotangent of every activation
};

// Reverse sweep over the tape in reverse topological order. `ct_act` holds
// the cotangent of every activation on entry (only terminal entries are
// usually non-zero) and the full activation cotangent on exit. Weight
// cotangents are accumulated into ct_w.
void backward_activations(const LiftedModule& lm, const Section& w, const ForwardTape& tape, Section& ct_act,
                          Section& ct_w, OpCounter* counter = nullptr);

// Gradient of <ct_out, linear_readout(a, F(w, x))> with respect to (w, a).
// Runs its own forward pass.
Gradient backward(const LiftedModule& lm, const Params& p, const Section& x, std::span<const double> ct_out,
                  OpCounter* counter = nullptr);

// Cotangent of the terminal activations fed by a cotangent on the linear
// readout output; the readout coefficients' gradient is written to ct_a.
void readout_vjp(const LiftedModule& lm, const Readout& a, const Section& act, std::span<const double> ct_out,
                 Section& ct_act, Readout* ct_a);

// Directional derivative of all activations along dw with inputs fixed.
Section jvp_activations(const LiftedModule& lm, const Section& w, const ForwardTape& tape, const Section& dw);

// Directional derivative of the readout output along (dw, da).
std::vector<double> jvp_forward(const LiftedModule& lm, const Params& p, const Section& x, const Params& tangent);

}  // namespace liftlab
