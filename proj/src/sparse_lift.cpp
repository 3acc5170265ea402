#include "liftlab/sparse_lift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "liftlab/errors.hpp"
#include "liftlab/rng.hpp"

namespace liftlab {

namespace {

constexpr std::uint64_t kMaskStream = 0;

std::uint64_t edge_key(std::uint64_t seed, int e, int i, int j, std::uint64_t stream) {
    return keyed::hash({seed, static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(i),
                        static_cast<std::uint64_t>(j), stream});
}

}  // namespace

double keyed_weight(std::uint64_t seed, int e, int i, int j, int c, const WeightInit& init) {
    const std::uint64_t s = 1 + 2 * static_cast<std::uint64_t>(c);
    return init.mean + init.scale * keyed::normal(edge_key(seed, e, i, j, s), edge_key(seed, e, i, j, s + 1));
}

double input_lambda_limit(int n0) { return std::min(n0 / 2.0, std::sqrt(n0 / 3.0)); }

double degree_bound(int n_a, int n_b, double lambda, int num_base_edges, double delta) {
    return 7.0 * (static_cast<double>(n_b) / n_a) * lambda + std::log(static_cast<double>(n_a)) +
           std::log(static_cast<double>(num_base_edges)) - std::log(delta);
}

SparseLift sample_sparse_lift(std::shared_ptr<const Blueprint> bp, const SparseLiftConfig& cfg) {
    const int ne = bp->num_edges();
    auto dims = resolve_lift_dims(*bp, cfg.dims);
    if (!cfg.lambda.empty() && static_cast<int>(cfg.lambda.size()) != ne)
        throw ConfigError("expected " + std::to_string(ne) + " lambda values, got " + std::to_string(cfg.lambda.size()));
    if (!cfg.init.empty() && static_cast<int>(cfg.init.size()) != ne)
        throw ConfigError("expected " + std::to_string(ne) + " weight distributions, got " +
                          std::to_string(cfg.init.size()));
    if (cfg.k < 0) throw ConfigError("readout dimension must be non-negative");

    SparseLift out;
    out.keep_probability.resize(ne);
    std::vector<WeightInit> init(ne);
    for (int e = 0; e < ne; ++e) {
        const auto& be = bp->edge(e);
        const int a = bp->graph().edge(e).src;
        init[e] = cfg.init.empty() ? WeightInit{be.init_mean, be.init_scale} : cfg.init[e];
        if (!(init[e].scale >= 0)) throw ConfigError("edge " + std::to_string(e) + ": negative weight scale");
        double p = 1.0;
        const bool dense = cfg.lambda.empty() && be.lift_mode == LiftMode::Dense;
        if (!dense) {
            const double lambda = cfg.lambda.empty() ? be.lambda : cfg.lambda[e];
            if (!(lambda > 0)) throw ConfigError("edge " + std::to_string(e) + ": lambda must be positive");
            p = lambda / dims[a];
            if (p > 1.0) {
                std::ostringstream os;
                os << "edge (" << a << ", " << bp->graph().edge(e).dst << "): lambda " << lambda
                   << " exceeds the source width " << dims[a] << "; keep probability clamped to 1";
                out.warnings.push_back(os.str());
                p = 1.0;
            }
            if (bp->is_input(a) && lambda > input_lambda_limit(dims[a])) {
                std::ostringstream os;
                os << "edge (" << a << ", " << bp->graph().edge(e).dst << "): lambda " << lambda
                   << " on an input edge exceeds min(n0/2, sqrt(n0/3)) = " << input_lambda_limit(dims[a]);
                out.warnings.push_back(os.str());
            }
        }
        out.keep_probability[e] = p;
    }

#ifdef _OPENMP
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#endif
    std::vector<ClassEdge> edges;
    for (int e = 0; e < ne; ++e) {
        const Edge& be = bp->graph().edge(e);
        const int na = dims[be.src], nb = dims[be.dst];
        const double p = out.keep_probability[e];
        std::vector<std::vector<int>> kept(nb);
#pragma omp parallel for schedule(static) num_threads(threads) if (static_cast<long long>(na) * nb > 65536)
        for (int j = 0; j < nb; ++j)
            for (int i = 0; i < na; ++i)
                if (p >= 1.0 || keyed::uniform(edge_key(cfg.seed, e, i, j, kMaskStream)) < p) kept[j].push_back(i);
        for (int j = 0; j < nb; ++j)
            for (int i : kept[j]) edges.push_back({e, i, j});
    }
    out.module = layered_lift(bp, dims, edges);

    const LiftedModule& lm = out.module;
    const Graph& g = lm.graph();
    auto off = class_offsets(*bp, dims);
    out.w = Section(lm.weight_bundle());
#pragma omp parallel for schedule(static) num_threads(threads) if (g.num_edges() > 65536)
    for (int id = 0; id < g.num_edges(); ++id) {
        const int be = lm.base_edge(id);
        const Edge& bed = bp->graph().edge(be);
        const int i = g.edge(id).src - off[bed.src];
        const int j = g.edge(id).dst - off[bed.dst];
        auto w = out.w.at(id);
        for (size_t c = 0; c < w.size(); ++c) w[c] = keyed_weight(cfg.seed, be, i, j, static_cast<int>(c), init[be]);
    }
    out.a = zero_readout(lm, cfg.k);
    return out;
}

DegreeSummary degree_summary(const LiftedModule& lm, std::span<const double> lambda, double delta) {
    const Blueprint& bp = lm.blueprint();
    const Graph& g = lm.graph();
    const int ne = bp.num_edges();
    DegreeSummary sum;
    sum.edges.resize(ne);
    std::vector<std::vector<int>> in_deg(ne), out_deg(ne);
    std::vector<int> pos(lm.num_vertices());
    for (int b = 0; b < bp.num_vertices(); ++b) {
        auto f = lm.fibre(b);
        for (size_t k = 0; k < f.size(); ++k) pos[f[k]] = static_cast<int>(k);
    }
    for (int e = 0; e < ne; ++e) {
        const Edge& be = bp.graph().edge(e);
        in_deg[e].assign(lm.class_size(be.dst), 0);
        out_deg[e].assign(lm.class_size(be.src), 0);
    }
    for (int id = 0; id < g.num_edges(); ++id) {
        const int e = lm.base_edge(id);
        ++in_deg[e][pos[g.edge(id).dst]];
        ++out_deg[e][pos[g.edge(id).src]];
    }
    auto stats = [](const std::vector<int>& d, int& lo, int& hi, double& mean) {
        if (d.empty()) {
            lo = hi = 0;
            mean = 0;
            return;
        }
        lo = *std::min_element(d.begin(), d.end());
        hi = *std::max_element(d.begin(), d.end());
        long long tot = 0;
        for (int x : d) tot += x;
        mean = static_cast<double>(tot) / d.size();
    };
    sum.ratio.assign(bp.num_vertices(), 0.0);
    for (int e = 0; e < ne; ++e) {
        auto& s = sum.edges[e];
        s.base_edge = e;
        stats(in_deg[e], s.min_in, s.max_in, s.mean_in);
        stats(out_deg[e], s.min_out, s.max_out, s.mean_out);
        const Edge& be = bp.graph().edge(e);
        const int na = lm.class_size(be.src), nb = lm.class_size(be.dst);
        if (!lambda.empty() && na > 0 && nb > 0) {
            s.bound = degree_bound(na, nb, lambda[e], ne, delta);
            s.within = s.max_out <= s.bound;
        } else {
            s.bound = std::numeric_limits<double>::infinity();
        }
        if (nb > 0) sum.ratio[be.dst] += static_cast<double>(s.max_out) * na / nb;
    }
    return sum;
}

}  // namespace liftlab
