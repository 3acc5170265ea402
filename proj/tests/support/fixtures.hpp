#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "liftlab/evaluate.hpp"
#include "liftlab/lifted_module.hpp"
#include "liftlab/sparse_lift.hpp"

namespace fixtures {

using liftlab::Blueprint;
using liftlab::LiftedModule;
using liftlab::Section;

std::shared_ptr<const Blueprint> share(Blueprint bp);

// Path blueprint 0 -> 1 -> ... with scalar "mul" edges; vertex 0 is the input
// and the last vertex is terminal. Every non-initial vertex uses `sigma`,
// the last one `last_sigma` when non-empty.
std::shared_ptr<const Blueprint> path_blueprint(const std::vector<int>& widths, const std::string& sigma,
                                                const std::string& last_sigma = "");

// Random layered scalar blueprint: 1-2 inputs, `depth` layers of 1-2
// vertices with parents in the previous layer and occasional skip edges.
// Every sink is terminal.
std::shared_ptr<const Blueprint> random_blueprint(std::mt19937_64& rng, int depth, const std::string& sigma);

// Uniform inputs in [-scale, scale].
Section random_inputs(const LiftedModule& lm, std::mt19937_64& rng, double scale = 1.0);
Section random_section(const liftlab::Bundle& b, std::mt19937_64& rng, double scale = 1.0);

// G unfolds H: inputs are kept, every other vertex of H gets 1..max_mult
// copies whose parents are copies of its parents. Returns G, the fibration
// phi : G -> H and the pulled-back weights. Vertex ids of G are shuffled.
struct Unfolding {
    LiftedModule g;
    std::vector<int> phi;
    Section w;
};
Unfolding unfold(const LiftedModule& h, const Section& wh, std::mt19937_64& rng, int max_mult = 3);

// Embeds H into a larger module: H's vertices come first, then `extra`
// new vertices per non-input class, each with random parents anywhere among
// the earlier vertices of the right classes. H's vertices receive no new
// parents, so the inclusion is a fibration.
struct Embedding {
    LiftedModule g;
    std::vector<int> inclusion;  // H vertex -> G vertex
    Section w;                   // H's weights on the copy, random elsewhere
};
Embedding embed(const LiftedModule& h, const Section& wh, std::mt19937_64& rng, int extra, double weight_scale = 1.0);

}  // namespace fixtures
