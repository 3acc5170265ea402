#include "liftlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "liftlab/errors.hpp"
#include "liftlab/rng.hpp"

namespace liftlab {

namespace {

double norm2(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// P(b <= Z <= a) for standard normal Z and a >= b, without cancellation in the tails.
double normal_interval(double b, double a) {
    constexpr double r = 0.7071067811865476;
    if (b >= 0) return 0.5 * (std::erfc(b * r) - std::erfc(a * r));
    if (a <= 0) return 0.5 * (std::erfc(-a * r) - std::erfc(-b * r));
    return 1.0 - 0.5 * std::erfc(a * r) - 0.5 * std::erfc(-b * r);
}

bool same_blueprint(const LiftedModule& a, const LiftedModule& b) {
    if (&a.blueprint() == &b.blueprint()) return true;
    return blueprint_to_json(a.blueprint().spec()) == blueprint_to_json(b.blueprint().spec());
}

}  // namespace

BallMass gaussian_ball_mass(const WeightInit& dist, std::span<const double> center, double tau, int samples,
                            std::uint64_t seed) {
    if (!(tau > 0)) throw NonPositiveRadius("ball radius must be positive");
    if (center.empty()) return {1.0, 0.0};
    if (dist.scale <= 0) {
        double s = 0;
        for (double c : center) s += (c - dist.mean) * (c - dist.mean);
        return {std::sqrt(s) <= tau ? 1.0 : 0.0, 0.0};
    }
    if (center.size() == 1) {
        const double z = (center[0] - dist.mean) / dist.scale, t = tau / dist.scale;
        return {normal_interval(z - t, z + t), 0.0};
    }
    samples = std::max(samples, 1);
    long long hits = 0;
    const double t2 = tau * tau;
    for (int s = 0; s < samples; ++s) {
        double d = 0;
        for (size_t c = 0; c < center.size(); ++c) {
            const std::uint64_t k = static_cast<std::uint64_t>(c);
            const double w = dist.mean + dist.scale * keyed::normal(keyed::hash({seed, std::uint64_t(s), k, 0}),
                                                                    keyed::hash({seed, std::uint64_t(s), k, 1}));
            d += (w - center[c]) * (w - center[c]);
        }
        hits += d <= t2;
    }
    const double p = static_cast<double>(hits) / samples;
    return {p, std::sqrt(p * (1 - p) / samples)};
}

double poisson_pmf(int k, double lambda) {
    if (k < 0) return 0.0;
    if (lambda <= 0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
}

double AlphaParams::min() const {
    return alpha.empty() ? 1.0 : *std::min_element(alpha.begin(), alpha.end());
}

AlphaParams alpha_parameter(const LiftedModule& witness, const Section& wstar, std::span<const double> lambda,
                            std::span<const WeightInit> dist, double eta, std::span<const int> dims, int mc_samples) {
    if (!(eta > 0)) throw NonPositiveRadius("eta must be positive");
    const Blueprint& bp = witness.blueprint();
    if (static_cast<int>(lambda.size()) != bp.num_edges() || static_cast<int>(dist.size()) != bp.num_edges())
        throw ConfigError("lambda and weight distributions must be given per base edge");
    if (static_cast<int>(dims.size()) != bp.num_vertices()) throw ConfigError("lift widths must be given per base vertex");
    const Graph& g = witness.graph();
    const int n = witness.num_vertices();
    AlphaParams out;
    out.eta = eta;
    out.alpha.assign(n, 0.0);
    out.poisson.assign(n, 1.0);
    out.ball.assign(n, 1.0);
    out.parent_alpha.assign(n, 1.0);
    out.K.assign(n, 1.0);
    for (int v : g.topological_order()) {
        const int b = witness.pi(v);
        if (bp.is_input(b)) {
            out.alpha[v] = 1.0 / dims[b];
            continue;
        }
        const auto base_in = bp.graph().in_edges(b);
        out.K[v] = std::ldexp(1.0, 1 + static_cast<int>(base_in.size())) * witness.class_size(b);
        for (int be : base_in) {
            int k = 0;
            for (int e : g.in_edges(v)) k += witness.base_edge(e) == be;
            const int a = bp.graph().edge(be).src;
            out.poisson[v] *= bp.edge(be).lift_mode == LiftMode::Dense ? (k == dims[a] ? 1.0 : 0.0)
                                                                        : poisson_pmf(k, lambda[be]);
        }
        for (int e : g.in_edges(v)) {
            const int be = witness.base_edge(e);
            out.ball[v] *= gaussian_ball_mass(dist[be], wstar.at(e), eta, mc_samples, keyed::hash({0xba11, std::uint64_t(e)})).p;
            out.parent_alpha[v] *= out.alpha[g.edge(e).src];
        }
        out.alpha[v] = out.poisson[v] * out.ball[v] * out.parent_alpha[v] / out.K[v];
    }
    return out;
}

std::vector<double> blueprint_lambda(const Blueprint& bp) {
    std::vector<double> l(bp.num_edges());
    for (int e = 0; e < bp.num_edges(); ++e) l[e] = bp.edge(e).lambda;
    return l;
}

std::vector<WeightInit> blueprint_init(const Blueprint& bp) {
    std::vector<WeightInit> d(bp.num_edges());
    for (int e = 0; e < bp.num_edges(); ++e) d[e] = {bp.edge(e).init_mean, bp.edge(e).init_scale};
    return d;
}

double covering_probability_bound(const LiftedModule& witness, std::span<const double> alpha,
                                  std::span<const int> dims) {
    const Blueprint& bp = witness.blueprint();
    double prod = 1.0;
    for (int b = 0; b < bp.num_vertices(); ++b) {
        if (bp.is_input(b)) continue;
        double s = 0;
        for (int v : witness.fibre(b)) {
            const double na = dims[b] * alpha[v];
            const double tau = na > 0 ? std::max(0.0, 1.0 - 1.0 / na) : 0.0;
            s += std::exp(-tau * tau / 4.0 * na);
        }
        prod *= std::max(0.0, 1.0 - s);
    }
    return prod;
}

bool poisson_limit_admissible(double lambda, long long n) {
    return static_cast<double>(n) >= std::max(2 * lambda, 2 * lambda * lambda / std::log(2.0));
}

std::vector<double> certified_continuity(const LiftedModule& lm, const Section& w, double eta, const Section& x) {
    ForwardTape tape = forward(lm, w, x);
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    std::vector<double> L(lm.num_vertices(), 0.0), radii;
    for (int v : g.topological_order()) {
        if (lm.is_input(v)) continue;
        radii.assign(tape.layout.slots(v), 0.0);
        for (int e : g.in_edges(v)) {
            const int u = g.edge(e).src;
            radii[lm.slot(e)] += bp.m(lm.base_edge(e)).deviation_bound(w.at(e), tape.act.at(u), eta, L[u]);
        }
        auto args = tape.class_args(v);
        L[v] = bp.sigma(lm.pi(v)).deviation_bound(args, radii);
    }
    return L;
}

namespace {

// Monte Carlo lower estimate of [L(eta, x)]_v: parents are perturbed on the
// spheres of radius eta (weights) and of the sampled parent level (activations).
std::vector<double> sampled_continuity(const LiftedModule& lm, const Section& w, double eta, const Section& x,
                                       int samples, std::uint64_t seed) {
    ForwardTape tape = forward(lm, w, x);
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    std::vector<double> L(lm.num_vertices(), 0.0);
    std::uint64_t counter = 0;
    auto sphere = [&](std::span<double> out, std::span<const double> c, double r) {
        double s = 0;
        for (size_t i = 0; i < out.size(); ++i) {
            out[i] = keyed::normal(keyed::hash({seed, counter, i, 0}), keyed::hash({seed, counter, i, 1}));
            s += out[i] * out[i];
        }
        ++counter;
        s = std::sqrt(s);
        for (size_t i = 0; i < out.size(); ++i) out[i] = c[i] + (s > 0 ? r * out[i] / s : 0.0);
    };
    std::vector<double> wp, yp, zp, y;
    for (int v : g.topological_order()) {
        if (lm.is_input(v)) continue;
        const ClassSumLayout& lay = tape.layout;
        const int slots = lay.slots(v);
        double best = 0;
        for (int s = 0; s < samples; ++s) {
            std::vector<std::vector<double>> sums(slots);
            for (int q = 0; q < slots; ++q) sums[q].assign(lay.dim(v, q), 0.0);
            for (int e : g.in_edges(v)) {
                const int u = g.edge(e).src;
                const int be = lm.base_edge(e);
                wp.resize(bp.w_dim(be));
                yp.resize(bp.y_dim(bp.graph().edge(be).src));
                zp.resize(bp.z_dim(be));
                sphere(wp, w.at(e), eta);
                sphere(yp, tape.act.at(u), L[u]);
                bp.m(be).eval(wp, yp, zp);
                auto& dst = sums[lm.slot(e)];
                for (size_t i = 0; i < zp.size(); ++i) dst[i] += zp[i];
            }
            std::vector<Vec> args(slots);
            for (int q = 0; q < slots; ++q) args[q] = sums[q];
            y.resize(lm.y_dim(v));
            bp.sigma(lm.pi(v)).eval(args, y);
            best = std::max(best, dist2(y, tape.act.at(v)));
        }
        L[v] = best;
    }
    return L;
}

}  // namespace

ContinuityBound continuity_bound(const LiftedModule& lm, const Section& w, double eta, std::span<const Section> X,
                                 int mc_samples, std::uint64_t seed) {
    if (eta < 0) throw NonPositiveRadius("eta must be nonnegative");
    ContinuityBound out;
    out.eta = eta;
    out.certified.assign(lm.num_vertices(), 0.0);
    if (mc_samples > 0) out.sampled.assign(lm.num_vertices(), 0.0);
    for (size_t k = 0; k < X.size(); ++k) {
        auto c = certified_continuity(lm, w, eta, X[k]);
        for (int v = 0; v < lm.num_vertices(); ++v) out.certified[v] = std::max(out.certified[v], c[v]);
        if (mc_samples > 0) {
            auto s = sampled_continuity(lm, w, eta, X[k], mc_samples, keyed::hash({seed, std::uint64_t(k)}));
            for (int v = 0; v < lm.num_vertices(); ++v) out.sampled[v] = std::max(out.sampled[v], s[v]);
        }
    }
    for (double v : out.certified) out.L_certified = std::max(out.L_certified, v);
    for (double v : out.sampled) out.L_sampled = std::max(out.L_sampled, v);
    return out;
}

QuotaSelection disjoint_quota_select(const std::vector<std::vector<int>>& candidates, std::span<const int> quotas) {
    if (candidates.size() != quotas.size()) throw ConfigError("one quota per candidate set is required");
    const int P = static_cast<int>(candidates.size());
    std::vector<int> ground;
    for (const auto& c : candidates) ground.insert(ground.end(), c.begin(), c.end());
    std::sort(ground.begin(), ground.end());
    ground.erase(std::unique(ground.begin(), ground.end()), ground.end());
    auto gid = [&](int x) { return static_cast<int>(std::lower_bound(ground.begin(), ground.end(), x) - ground.begin()); };
    std::vector<std::vector<int>> adj(P);
    for (int i = 0; i < P; ++i) {
        for (int x : candidates[i]) adj[i].push_back(gid(x));
        std::sort(adj[i].begin(), adj[i].end());
        adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
    }
    std::vector<int> slot_owner;
    for (int i = 0; i < P; ++i) {
        if (quotas[i] < 0) throw ConfigError("quotas must be nonnegative");
        for (int c = 0; c < quotas[i]; ++c) slot_owner.push_back(i);
    }
    std::vector<int> match_ground(ground.size(), -1), match_slot(slot_owner.size(), -1);
    std::vector<char> visited(ground.size());
    std::function<bool(int)> augment = [&](int s) {
        for (int gx : adj[slot_owner[s]]) {
            if (visited[gx]) continue;
            visited[gx] = 1;
            if (match_ground[gx] < 0 || augment(match_ground[gx])) {
                match_ground[gx] = s;
                match_slot[s] = gx;
                return true;
            }
        }
        return false;
    };
    QuotaSelection out;
    for (int s = 0; s < static_cast<int>(slot_owner.size()); ++s) {
        for (int gx : adj[slot_owner[s]])
            if (match_ground[gx] < 0) {
                match_ground[gx] = s;
                match_slot[s] = gx;
                break;
            }
        if (match_slot[s] >= 0) continue;
        std::fill(visited.begin(), visited.end(), 0);
        if (augment(s)) continue;
        // The alternating tree rooted at s has more slots than neighbours.
        std::vector<char> in_violator(P, 0);
        in_violator[slot_owner[s]] = 1;
        for (size_t gx = 0; gx < ground.size(); ++gx)
            if (visited[gx] && match_ground[gx] >= 0) in_violator[slot_owner[match_ground[gx]]] = 1;
        for (int i = 0; i < P; ++i)
            if (in_violator[i]) out.violator.push_back(i);
        return out;
    }
    out.feasible = true;
    out.chosen.assign(P, {});
    for (size_t s = 0; s < slot_owner.size(); ++s) out.chosen[slot_owner[s]].push_back(ground[match_slot[s]]);
    for (auto& v : out.chosen) std::sort(v.begin(), v.end());
    return out;
}

std::vector<int> PartialMorphism::map(int lift_vertices) const {
    std::vector<int> m(lift_vertices, -1);
    for (size_t k = 0; k < vertices.size(); ++k)
        if (vertices[k] >= 0 && vertices[k] < lift_vertices) m[vertices[k]] = image[k];
    return m;
}

nlohmann::json PartialMorphism::to_json() const {
    nlohmann::json pairs = nlohmann::json::array();
    for (size_t k = 0; k < vertices.size(); ++k) pairs.push_back({vertices[k], image[k]});
    return {{"eta", eta}, {"alpha", alpha}, {"pairs", pairs}};
}

int covering_quota(double alpha, int class_size) {
    return std::max(0, static_cast<int>(std::ceil(alpha * class_size - 1e-9)));
}

CoverSearch find_covering_morphism(const LiftedModule& lm, const Section& w, const LiftedModule& witness,
                                   const Section& wstar, std::span<const double> alpha, double eta) {
    if (!(eta > 0)) throw NonPositiveRadius("eta must be positive");
    if (!same_blueprint(lm, witness)) throw ConfigError("lift and witness must share a blueprint");
    if (static_cast<int>(alpha.size()) != witness.num_vertices()) throw ConfigError("alpha needs one value per witness vertex");
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    const Graph& h = witness.graph();
    CoverSearch out;
    out.morphism.eta = eta;
    out.morphism.alpha.assign(alpha.begin(), alpha.end());
    std::vector<int> phi(lm.num_vertices(), -1), count(witness.num_vertices(), 0);

    for (int b : bp.graph().topological_order()) {
        auto W = witness.fibre(b);
        if (W.empty()) continue;
        const int P = static_cast<int>(W.size());
        std::vector<std::vector<int>> E(P);
        std::map<int, std::vector<int>> compatible;  // lift vertex -> indices into W
        if (bp.is_input(b)) {
            for (int q = 0; q < P; ++q) {
                const int j = lm.vertex_of_name(witness.name(W[q]));
                if (j < 0) {
                    out.blocking_vertex = W[q];
                    out.reason = "input name is not used by the lift";
                    return out;
                }
                E[q].push_back(j);
                compatible[j].push_back(q);
            }
        } else {
            std::map<std::vector<int>, std::vector<int>> by_parents;
            for (int q = 0; q < P; ++q) {
                std::vector<int> ps(h.parents(W[q]).begin(), h.parents(W[q]).end());
                std::sort(ps.begin(), ps.end());
                by_parents[ps].push_back(q);
            }
            std::vector<int> images;
            for (int j : lm.fibre(b)) {
                images.clear();
                bool ok = true;
                for (int p : g.parents(j)) {
                    if (phi[p] < 0) {
                        ok = false;
                        break;
                    }
                    images.push_back(phi[p]);
                }
                if (!ok) continue;
                std::sort(images.begin(), images.end());
                auto it = by_parents.find(images);
                if (it == by_parents.end()) continue;
                for (int q : it->second) {
                    bool match = true;
                    for (int e : g.in_edges(j)) {
                        const int es = h.find_edge(phi[g.edge(e).src], W[q]);
                        if (dist2(w.at(e), wstar.at(es)) > eta) {
                            match = false;
                            break;
                        }
                    }
                    if (match) {
                        E[q].push_back(j);
                        compatible[j].push_back(q);
                    }
                }
            }
        }
        std::vector<int> quotas(P);
        for (int q = 0; q < P; ++q) quotas[q] = covering_quota(alpha[W[q]], lm.class_size(b));
        QuotaSelection sel = disjoint_quota_select(E, quotas);
        if (!sel.feasible) {
            out.blocking_vertex = W[sel.violator.front()];
            std::ostringstream os;
            os << "quotas of witness vertices";
            int need = 0;
            std::vector<int> uni;
            for (int q : sel.violator) {
                os << ' ' << W[q];
                need += quotas[q];
                uni.insert(uni.end(), E[q].begin(), E[q].end());
            }
            std::sort(uni.begin(), uni.end());
            uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
            os << " need " << need << " lift vertices but only " << uni.size() << " candidates exist";
            out.reason = os.str();
            return out;
        }
        for (int q = 0; q < P; ++q)
            for (int j : sel.chosen[q]) {
                phi[j] = W[q];
                ++count[W[q]];
            }
        for (const auto& [j, qs] : compatible) {
            if (phi[j] >= 0) continue;
            int best = qs.front();
            for (int q : qs)
                if (count[W[q]] < count[W[best]]) best = q;
            phi[j] = W[best];
            ++count[W[best]];
        }
    }
    for (int v = 0; v < lm.num_vertices(); ++v)
        if (phi[v] >= 0) {
            out.morphism.vertices.push_back(v);
            out.morphism.image.push_back(phi[v]);
        }
    out.found = true;
    return out;
}

std::string CoverViolation::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Inclusion: os << "inclusion: lift vertex " << lift_vertex << " has a parent outside S"; break;
        case Kind::Type: os << "type: lift vertex " << lift_vertex << " cannot map to witness vertex " << witness_vertex; break;
        case Kind::Fibration:
            os << "fibration: parents of lift vertex " << lift_vertex << " do not map bijectively onto those of witness vertex "
               << witness_vertex;
            break;
        case Kind::Weight:
            os << "weight: lift edge " << lift_edge << " differs from its witness edge by " << amount << " beyond eta";
            break;
        case Kind::Volume:
            os << "volume: witness vertex " << witness_vertex << " is " << amount << " preimages short";
            break;
    }
    return os.str();
}

std::string CoverReport::describe() const {
    std::string s;
    for (const auto& v : violations) s += v.describe() + "\n";
    return s;
}

CoverReport verify_covering(const PartialMorphism& pm, const LiftedModule& lm, const Section& w,
                            const LiftedModule& witness, const Section& wstar) {
    using K = CoverViolation::Kind;
    CoverReport rep;
    const Graph& g = lm.graph();
    const Graph& h = witness.graph();
    std::vector<int> phi(lm.num_vertices(), -1);
    std::vector<int> count(witness.num_vertices(), 0);
    for (size_t k = 0; k < pm.vertices.size(); ++k) {
        const int v = pm.vertices[k], i = pm.image[k];
        if (v < 0 || v >= lm.num_vertices() || i < 0 || i >= witness.num_vertices() || phi[v] >= 0) {
            rep.violations.push_back({K::Type, v, i, -1, 0});
            continue;
        }
        phi[v] = i;
        ++count[i];
    }
    for (int v = 0; v < lm.num_vertices(); ++v) {
        const int i = phi[v];
        if (i < 0) continue;
        if (lm.pi(v) != witness.pi(i) || (lm.is_input(v) && lm.name(v) != witness.name(i))) {
            rep.violations.push_back({K::Type, v, i, -1, 0});
            continue;
        }
        bool inside = true;
        for (int p : g.parents(v)) inside = inside && phi[p] >= 0;
        if (!inside) {
            rep.violations.push_back({K::Inclusion, v, i, -1, 0});
            continue;
        }
        std::vector<int> imgs;
        for (int p : g.parents(v)) imgs.push_back(phi[p]);
        std::vector<int> sorted = imgs;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> expect(h.parents(i).begin(), h.parents(i).end());
        std::sort(expect.begin(), expect.end());
        if (sorted != expect) {
            rep.violations.push_back({K::Fibration, v, i, -1, 0});
            continue;
        }
        for (int e : g.in_edges(v)) {
            const int es = h.find_edge(phi[g.edge(e).src], i);
            const double d = dist2(w.at(e), wstar.at(es));
            if (d > pm.eta) rep.violations.push_back({K::Weight, v, i, e, d - pm.eta});
        }
    }
    for (int i = 0; i < witness.num_vertices(); ++i) {
        const double need = (i < static_cast<int>(pm.alpha.size()) ? pm.alpha[i] : 1.0) * lm.class_size(witness.pi(i));
        if (count[i] < need - 1e-9) rep.violations.push_back({K::Volume, -1, i, -1, need - count[i]});
    }
    return rep;
}

double readout_error(const LiftedModule& lm, const Section& w, const Readout& a, std::span<const Section> X,
                     const std::vector<std::vector<double>>& fstar) {
    if (X.empty()) throw EmptyDataset("sample is empty");
    if (fstar.size() != X.size()) throw ShapeMismatch("one target per sample point is required");
    double s = 0;
    for (size_t k = 0; k < X.size(); ++k) {
        auto pred = linear_readout(lm, a, forward(lm, w, X[k]).act);
        if (pred.size() != fstar[k].size()) throw ShapeMismatch("target has the wrong length");
        for (size_t i = 0; i < pred.size(); ++i) s += (pred[i] - fstar[k][i]) * (pred[i] - fstar[k][i]);
    }
    return std::sqrt(s / X.size());
}

double readout_constant(const LiftedModule& lm, const Readout& a) {
    double c = 0;
    auto terms = lm.terminals();
    for (size_t t = 0; t < terms.size(); ++t) {
        auto at = a.coeffs.at(static_cast<int>(t));
        const size_t d = lm.y_dim(terms[t]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(lm.class_size(lm.pi(terms[t]))));
        for (int i = 0; i < a.k; ++i) c += norm2(at.subspan(i * d, d)) * scale;
    }
    return c;
}

TangentGap tangent_gap(const LiftedModule& lm, const Section& w, const Readout& a, const LiftedModule& witness,
                       const Section& wstar, const Readout& astar, const PartialMorphism& pm,
                       std::span<const Section> X, const std::vector<std::vector<double>>& fstar) {
    CoverReport rep = verify_covering(pm, lm, w, witness, wstar);
    if (!rep.ok()) throw UnverifiedMorphism(rep.describe());
    TangentGap out;
    out.u = zero_readout(lm, astar.k);
    std::vector<int> phi = pm.map(lm.num_vertices());
    std::vector<int> count(witness.num_vertices(), 0);
    for (int i : pm.image) ++count[i];
    std::vector<int> wt_index(witness.num_vertices(), -1);
    auto wterms = witness.terminals();
    for (size_t t = 0; t < wterms.size(); ++t) wt_index[wterms[t]] = static_cast<int>(t);
    auto terms = lm.terminals();
    for (size_t t = 0; t < terms.size(); ++t) {
        const int v = terms[t], i = phi[v];
        if (i < 0) continue;
        const int b = lm.pi(v);
        const double s = count[i] * std::sqrt(static_cast<double>(witness.class_size(b)) / lm.class_size(b));
        auto src = astar.coeffs.at(wt_index[i]);
        auto dst = out.u.coeffs.at(static_cast<int>(t));
        for (size_t j = 0; j < dst.size(); ++j) dst[j] = src[j] / s;
    }
    out.linearized_error = readout_error(lm, w, out.u, X, fstar);
    out.witness_error = readout_error(witness, wstar, astar, X, fstar);
    out.cstar = readout_constant(witness, astar);
    out.L = continuity_bound(witness, wstar, pm.eta, X).L_certified;
    double s = 0;
    for (size_t t = 0; t < wterms.size(); ++t) {
        const int b = witness.pi(wterms[t]);
        double sq = 0;
        for (double x : astar.coeffs.at(static_cast<int>(t))) sq += x * x;
        s += sq / (pm.alpha[wterms[t]] * witness.class_size(b));
    }
    out.kappa = norm2(a.coeffs.values) + std::sqrt(s);
    return out;
}

double lambda_constant(std::span<const double> lambda, int witness_vertices, double delta) {
    const double ne = static_cast<double>(lambda.size());
    double s = 0;
    for (double l : lambda) s += 7 * l + 1 + std::log(2.0) + std::log(witness_vertices + ne) - std::log(delta);
    return s;
}

namespace {

struct Resolved {
    std::vector<double> lambda;
    std::vector<WeightInit> dist;
    std::vector<int> dims;
};

Resolved resolve(const TheoryInputs& in) {
    if (!in.witness || !in.wstar || !in.astar) throw ConfigError("theory inputs need a witness with weights and readout");
    const Blueprint& bp = in.witness->blueprint();
    Resolved r;
    r.lambda = in.lambda.empty() ? blueprint_lambda(bp) : in.lambda;
    r.dist = in.dist.empty() ? blueprint_init(bp) : in.dist;
    r.dims = in.dims.empty() ? resolve_lift_dims(bp) : in.dims;
    return r;
}

double c_constant(const LiftedModule& witness, const Readout& astar, std::span<const double> alpha) {
    double s = 0;
    auto wterms = witness.terminals();
    for (size_t t = 0; t < wterms.size(); ++t) {
        double sq = 0;
        for (double x : astar.coeffs.at(static_cast<int>(t))) sq += x * x;
        s += 2 * sq / (alpha[wterms[t]] * witness.class_size(witness.pi(wterms[t])));
    }
    return std::sqrt(s);
}

double n1_formula(double c, double eta, double fnorm, double eps, double eps0, double Lambda, int nv, double amin) {
    const double a = 1 + 4 * c / eta * fnorm * fnorm / (eps - eps0);
    return 8 * a * a * std::pow(1 + Lambda, 1 + nv) / amin;
}

}  // namespace

TheoryReport threshold_constants(const TheoryInputs& in) {
    Resolved r = resolve(in);
    const LiftedModule& wit = *in.witness;
    const Blueprint& bp = wit.blueprint();
    if (!(in.delta > 0 && in.delta <= 1)) throw ConfigError("delta must lie in (0, 1]");
    TheoryReport rep;
    rep.epsilon = in.epsilon;
    rep.delta = in.delta;
    const double err = readout_error(wit, *in.wstar, *in.astar, in.X, in.fstar);
    rep.eps0 = err * err;
    if (!(in.epsilon > rep.eps0))
        throw EpsilonBelowWitness("epsilon " + std::to_string(in.epsilon) + " does not exceed the witness loss " +
                                  std::to_string(rep.eps0));
    double fs = 0;
    for (const auto& f : in.fstar)
        for (double x : f) fs += x * x;
    rep.fstar_norm = std::sqrt(fs / in.fstar.size());
    rep.cstar = readout_constant(wit, *in.astar);
    rep.target = rep.cstar > 0 ? (std::sqrt((in.epsilon + rep.eps0) / 2) - std::sqrt(rep.eps0)) / rep.cstar
                               : std::numeric_limits<double>::infinity();

    auto L = [&](double eta) { return continuity_bound(wit, *in.wstar, eta, in.X).L_certified; };
    constexpr double kCap = 1e6;
    double lo = 0, hi = 1;
    while (hi < kCap && L(hi) < rep.target) {
        lo = hi;
        hi *= 2;
    }
    if (L(hi) < rep.target) {
        lo = hi;
        rep.notes.push_back("continuity stays below the target up to eta = " + std::to_string(hi) + "; eta capped");
    } else {
        for (int it = 0; it < 60 && hi - lo > 1e-6 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (L(mid) < rep.target ? lo : hi) = mid;
        }
    }
    rep.eta = lo;
    rep.L_at_eta = L(lo);
    if (!(rep.eta > 0)) throw ConfigError("no positive eta keeps the continuity constant below the target");

    rep.Lambda = lambda_constant(r.lambda, wit.num_vertices(), in.delta);
    AlphaParams al = alpha_parameter(wit, *in.wstar, r.lambda, r.dist, rep.eta / 2, r.dims, in.mc_samples);
    rep.alpha = al.alpha;
    rep.alpha_min = al.min();
    rep.c = c_constant(wit, *in.astar, al.alpha);
    rep.kappa = 3.0 / (rep.c * rep.c) / std::pow(rep.fstar_norm, 4);
    rep.N1.assign(bp.num_vertices(), 0.0);
    const double n1 = n1_formula(rep.c, rep.eta, rep.fstar_norm, in.epsilon, rep.eps0, rep.Lambda, bp.num_vertices(),
                                 rep.alpha_min);
    for (int b = 0; b < bp.num_vertices(); ++b)
        rep.N1[b] = bp.is_input(b) ? static_cast<double>(bp.names_of(b).size()) : n1;

    rep.dims = r.dims;
    std::vector<double> n(bp.num_vertices());
    for (int b = 0; b < bp.num_vertices(); ++b) n[b] = in.dims.empty() ? rep.N1[b] : in.dims[b];
    if (in.dims.empty()) rep.dims.clear();
    for (int e = 0; e < bp.num_edges(); ++e) {
        const Edge& be = bp.graph().edge(e);
        const double na = n[be.src], nb = n[be.dst];
        if (bp.is_input(be.src) && bp.edge(e).lift_mode == LiftMode::Sparse &&
            r.lambda[e] > input_lambda_limit(static_cast<int>(bp.names_of(be.src).size())))
            rep.input_lambda_ok = false;
        if (nb < na * std::log(na)) rep.width_growth_ok = false;
        if (na < std::max(2 * r.lambda[e], 2 * r.lambda[e] * r.lambda[e] / std::log(2.0))) rep.poisson_ok = false;
    }
    if (!bp.smooth()) rep.notes.push_back("blueprint has non-differentiable primitives");
    rep.notes.push_back("tangent approximation is witnessed on the sample only");
    return rep;
}

double n1_at_eta(const TheoryInputs& in, const TheoryReport& base, double eta) {
    Resolved r = resolve(in);
    AlphaParams al = alpha_parameter(*in.witness, *in.wstar, r.lambda, r.dist, eta / 2, r.dims, in.mc_samples);
    const double c = c_constant(*in.witness, *in.astar, al.alpha);
    return n1_formula(c, eta, base.fstar_norm, base.epsilon, base.eps0, base.Lambda,
                      in.witness->blueprint().num_vertices(), al.min());
}

nlohmann::json TheoryReport::to_json() const {
    auto num = [](double x) -> nlohmann::json {
        if (std::isfinite(x)) return x;
        return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
    };
    nlohmann::json n1 = nlohmann::json::array();
    for (double x : N1) n1.push_back(num(x));
    return {{"epsilon", num(epsilon)},
            {"delta", num(delta)},
            {"eps0", num(eps0)},
            {"fstar_norm", num(fstar_norm)},
            {"C_star", num(cstar)},
            {"eta", num(eta)},
            {"continuity_target", num(target)},
            {"L_at_eta", num(L_at_eta)},
            {"Lambda", num(Lambda)},
            {"c", num(c)},
            {"kappa", num(kappa)},
            {"alpha_min", num(alpha_min)},
            {"alpha", alpha},
            {"N1", n1},
            {"dims", dims},
            {"assumptions",
             {{"input_lambda", input_lambda_ok}, {"width_growth", width_growth_ok}, {"poisson_limit", poisson_ok}}},
            {"notes", notes}};
}

}  // namespace liftlab
