#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "liftlab/evaluate.hpp"
#include "liftlab/lifted_module.hpp"
#include "liftlab/sparse_lift.hpp"

namespace liftlab {

// ---------------------------------------------------------------------------
// Ball masses and the alpha parameter

struct BallMass {
    double p = 0;
    double std_error = 0;  // zero for the closed form
};

// P(||w - center|| <= tau) for w with independent N(mean, scale^2)
// coordinates. Closed form in dimension 1, seeded Monte Carlo above.
// Throws NonPositiveRadius when tau <= 0.
BallMass gaussian_ball_mass(const WeightInit& dist, std::span<const double> center, double tau,
                            int samples = 100000, std::uint64_t seed = 0);

// Poisson density e^{-lambda} lambda^k / k!.
double poisson_pmf(int k, double lambda);

struct AlphaParams {
    double eta = 0;
    std::vector<double> alpha;         // per witness vertex
    std::vector<double> poisson;       // product of degree probabilities
    std::vector<double> ball;          // product of ball masses over in-edges
    std::vector<double> parent_alpha;  // product of the parents' alpha
    std::vector<double> K;             // 2^{1 + base in-degree} * witness class size

    double min() const;
};

// Recursion over the witness in topological order. `lambda` and `dist` are
// indexed by base edge, `dims` holds the lift widths per base vertex (used on
// input classes). Dense base edges replace the Poisson factor by the
// indicator that the witness vertex has all n_a parents of class a.
AlphaParams alpha_parameter(const LiftedModule& witness, const Section& wstar, std::span<const double> lambda,
                            std::span<const WeightInit> dist, double eta, std::span<const int> dims,
                            int mc_samples = 100000);

// Per base edge parameters taken from the blueprint annotations.
std::vector<double> blueprint_lambda(const Blueprint& bp);
std::vector<WeightInit> blueprint_init(const Blueprint& bp);

// Lower bound on the probability that a random sparse lift of widths `dims`
// has an (alpha, eta)-cover of the witness:
//   prod over non-input b of (1 - sum_{v over b} exp(-tau(v)^2 / 4 n_b alpha(v)))_+
// with tau(v) = (1 - 1 / (n_b alpha(v)))_+.
double covering_probability_bound(const LiftedModule& witness, std::span<const double> alpha,
                                  std::span<const int> dims);

// (1 - lambda / n)^(n - k) >= e^{-lambda} / 2, valid when n >= max(2 lambda, 2 lambda^2 / log 2).
bool poisson_limit_admissible(double lambda, long long n);

// ---------------------------------------------------------------------------
// Continuity constants

struct ContinuityBound {
    double eta = 0;
    std::vector<double> certified;  // per vertex, max over the sample
    std::vector<double> sampled;    // per vertex, max over the sample (empty without Monte Carlo)
    double L_certified = 0;
    double L_sampled = 0;
};

// Certified per-vertex bound of [L(eta, x)]_v propagated with the primitives'
// deviation bounds, for one input.
std::vector<double> certified_continuity(const LiftedModule& lm, const Section& w, double eta, const Section& x);

// Certified bound over a sample and, when mc_samples > 0, a Monte Carlo lower
// estimate of the same recursion.
ContinuityBound continuity_bound(const LiftedModule& lm, const Section& w, double eta, std::span<const Section> X,
                                 int mc_samples = 0, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Quota selection

struct QuotaSelection {
    bool feasible = false;
    std::vector<std::vector<int>> chosen;  // V_i, ascending
    std::vector<int> violator;             // indices I with sum q_i > #union E_i when infeasible
};

// Disjoint V_i subset of E_i with #V_i >= q_i via augmenting paths. Candidate
// sets are scanned in ascending order and free elements are taken before any
// augmentation, so the result is canonical.
QuotaSelection disjoint_quota_select(const std::vector<std::vector<int>>& candidates, std::span<const int> quotas);

// ---------------------------------------------------------------------------
// Covering partial morphisms

struct PartialMorphism {
    double eta = 0;
    std::vector<double> alpha;   // per witness vertex
    std::vector<int> vertices;   // lift vertices of S, ascending
    std::vector<int> image;      // witness vertex of each entry of `vertices`

    // Witness image of a lift vertex, -1 outside S.
    std::vector<int> map(int lift_vertices) const;
    nlohmann::json to_json() const;
};

// Required preimage size ceil(alpha n - 1e-9) of a witness vertex.
int covering_quota(double alpha, int class_size);

struct CoverSearch {
    bool found = false;
    PartialMorphism morphism;
    int blocking_vertex = -1;  // witness vertex where the search stopped
    std::string reason;
};

// Processes base classes in topological order. For witness vertex i over class
// b the candidates are the lift vertices of b whose parents are all matched
// and map bijectively onto the parents of i with every weight within eta.
// Quotas are placed with disjoint_quota_select; leftover candidates are then
// given to the compatible witness vertex with the fewest preimages.
CoverSearch find_covering_morphism(const LiftedModule& lm, const Section& w, const LiftedModule& witness,
                                   const Section& wstar, std::span<const double> alpha, double eta);

struct CoverViolation {
    enum class Kind { Inclusion, Type, Fibration, Weight, Volume };
    Kind kind;
    int lift_vertex = -1;
    int witness_vertex = -1;
    int lift_edge = -1;
    double amount = 0;
    std::string describe() const;
};

struct CoverReport {
    std::vector<CoverViolation> violations;
    bool ok() const { return violations.empty(); }
    std::string describe() const;
};

CoverReport verify_covering(const PartialMorphism& pm, const LiftedModule& lm, const Section& w,
                            const LiftedModule& witness, const Section& wstar);

// ---------------------------------------------------------------------------
// Tangent approximation

// Root mean squared error of a readout over a sample.
double readout_error(const LiftedModule& lm, const Section& w, const Readout& a, std::span<const Section> X,
                     const std::vector<std::vector<double>>& fstar);

// sum_{i, v} ||a_{i, v}|| / sqrt(class size of v).
double readout_constant(const LiftedModule& lm, const Readout& a);

struct TangentGap {
    Readout u;                   // readout-only tangent built from the morphism
    double linearized_error = 0; // ||u . F(w, .) - f*|| over X
    double witness_error = 0;    // ||a* . F*(w*, .) - f*|| over X
    double cstar = 0;
    double L = 0;                // certified continuity constant at the morphism's eta
    double kappa = 0;            // ||a|| + sqrt(sum ||a*||^2 / (alpha class size))
    double bound() const { return witness_error + cstar * L; }
    bool within(double slack = 1e-9) const { return linearized_error <= bound() + slack; }
};

// Throws UnverifiedMorphism when pm fails verify_covering.
TangentGap tangent_gap(const LiftedModule& lm, const Section& w, const Readout& a, const LiftedModule& witness,
                       const Section& wstar, const Readout& astar, const PartialMorphism& pm,
                       std::span<const Section> X, const std::vector<std::vector<double>>& fstar);

// ---------------------------------------------------------------------------
// Threshold constants

struct TheoryInputs {
    const LiftedModule* witness = nullptr;
    const Section* wstar = nullptr;
    const Readout* astar = nullptr;
    std::vector<double> lambda;           // per base edge; empty uses the blueprint
    std::vector<WeightInit> dist;         // per base edge; empty uses the blueprint
    double delta = 0.1;
    double epsilon = 0;
    std::vector<Section> X;
    std::vector<std::vector<double>> fstar;
    std::vector<int> dims;                // lift widths to check the assumptions on; empty uses N1
    int mc_samples = 100000;
};

struct TheoryReport {
    double epsilon = 0, delta = 0;
    double eps0 = 0;          // witness loss
    double fstar_norm = 0;    // ||f*||_D
    double cstar = 0;
    double eta = 0;
    double target = 0;        // continuity level eta must stay under
    double L_at_eta = 0;
    double Lambda = 0;
    double c = 0;
    double kappa = 0;
    double alpha_min = 0;
    std::vector<double> alpha;  // alpha_{eta/2}
    std::vector<double> N1;     // per base vertex
    std::vector<int> dims;      // widths the flags refer to
    bool input_lambda_ok = true;
    bool width_growth_ok = true;  // n_b >= n_a log n_a on every base edge
    bool poisson_ok = true;       // n_a >= max(2 lambda, 2 lambda^2 / log 2)
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
};

double lambda_constant(std::span<const double> lambda, int witness_vertices, double delta);

// Throws EpsilonBelowWitness when epsilon <= eps0 and ConfigError on a bad delta.
TheoryReport threshold_constants(const TheoryInputs& in);

// N1 over the non-input classes when eta is chosen freely (c and alpha are
// evaluated at eta / 2). Requires a report from threshold_constants for the
// eta-independent constants.
double n1_at_eta(const TheoryInputs& in, const TheoryReport& base, double eta);

}  // namespace liftlab
