#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "liftlab/evaluate.hpp"
#include "liftlab/lifted_module.hpp"

namespace liftlab {

struct WeightInit {
    double mean = 0.0;
    double scale = 1.0;
};

struct SparseLiftConfig {
    std::vector<int> dims;          // per base vertex; empty uses the blueprint's lift_dim
    std::vector<double> lambda;     // per base edge; empty uses the blueprint
    std::vector<WeightInit> init;   // per base edge; empty uses the blueprint
    std::uint64_t seed = 0;
    int k = 1;                      // readout rows
    int threads = 0;                // 0 keeps the OpenMP default
};

struct SparseLift {
    LiftedModule module;
    Section w;
    Readout a;                            // zero
    std::vector<double> keep_probability; // per base edge
    std::vector<std::string> warnings;
};

// Keeps each candidate edge over base edge (a, b) independently with
// probability lambda / n_a (1 for dense edges), clamped to 1 with a warning.
// Masks and weights are keyed on (seed, base edge, i, j) and do not depend on
// the thread count.
SparseLift sample_sparse_lift(std::shared_ptr<const Blueprint> bp, const SparseLiftConfig& cfg);

// Weight of candidate edge (i, j) over base edge e, coordinate c.
double keyed_weight(std::uint64_t seed, int e, int i, int j, int c, const WeightInit& init);

// Largest lambda on edges out of an input class of width n0 for which the
// covering analysis applies: min(n0 / 2, sqrt(n0 / 3)).
double input_lambda_limit(int n0);

struct EdgeDegreeStats {
    int base_edge = 0;
    int min_in = 0, max_in = 0;
    int min_out = 0, max_out = 0;
    double mean_in = 0, mean_out = 0;
    double bound = 0;     // 7 (n_b / n_a) lambda + log n_a + log #E_B - log delta
    bool within = true;   // max_out <= bound
};

struct DegreeSummary {
    std::vector<EdgeDegreeStats> edges;  // per base edge
    // Per base vertex b: sum over parents a of max_out(a, b) n_a / n_b.
    std::vector<double> ratio;
};

// Exact degree counts per edge class. `lambda` (per base edge) and `delta`
// feed the out-degree bound; pass an empty lambda to skip it.
DegreeSummary degree_summary(const LiftedModule& lm, std::span<const double> lambda = {}, double delta = 0.1);

double degree_bound(int n_a, int n_b, double lambda, int num_base_edges, double delta);

}  // namespace liftlab
