#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "liftlab/errors.hpp"
#include "liftlab/sparse_lift.hpp"

using namespace liftlab;

namespace {

// Regularized upper incomplete gamma Q(a, x) by series / continued fraction.
double gamma_q(double a, double x) {
    if (x <= 0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1) {
        double sum = 1.0 / a, term = sum;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < 1e-16 * std::abs(sum)) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
    }
    double b = x + 1 - a, c = 1e300, d = 1 / b, h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

double binom_pmf(int n, int k, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                    (n - k) * std::log1p(-p));
}

std::shared_ptr<const Blueprint> two_vertex(int na, int nb) {
    return fixtures::path_blueprint({na, nb}, "sum_identity");
}

SparseLiftConfig config(int na, int nb, double lambda, std::uint64_t seed) {
    SparseLiftConfig c;
    c.dims = {na, nb};
    c.lambda = {lambda};
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("dense limit and clamping") {
    auto bp = two_vertex(7, 5);
    auto sl = sample_sparse_lift(bp, config(7, 5, 7.0, 1));
    CHECK(sl.module.num_edges() == 35);
    CHECK(sl.warnings.size() == 1);  // input-edge lambda limit
    auto clamped = sample_sparse_lift(bp, config(7, 5, 100.0, 1));
    CHECK(clamped.module.num_edges() == 35);
    CHECK(clamped.keep_probability[0] == 1.0);
    bool saw_clamp = false;
    for (const auto& w : clamped.warnings) saw_clamp |= w.find("clamped") != std::string::npos;
    CHECK(saw_clamp);
    auto ds = degree_summary(clamped.module);
    CHECK(ds.edges[0].min_out == 5);
    CHECK(ds.edges[0].max_out == 5);

    auto tiny = sample_sparse_lift(bp, config(7, 5, 1e-12, 1));
    CHECK(tiny.module.num_edges() == 0);
    CHECK(degree_summary(tiny.module).edges[0].max_in == 0);

    CHECK_THROWS_AS(sample_sparse_lift(bp, config(7, 5, -1.0, 1)), ConfigError);
    CHECK_THROWS_AS(sample_sparse_lift(bp, config(6, 5, 1.0, 1)), ConfigError);
    CHECK(sl.a.coeffs.values == std::vector<double>(5, 0.0));
}

TEST_CASE("sampling is reproducible and independent of the thread count") {
    auto bp = two_vertex(300, 300);
    auto c1 = config(300, 300, 4.0, 42);
    auto a = sample_sparse_lift(bp, c1);
    auto b = sample_sparse_lift(bp, c1);
    c1.threads = 3;
    auto c = sample_sparse_lift(bp, c1);
    CHECK(a.module.graph() == b.module.graph());
    CHECK(a.w.values == b.w.values);
    CHECK(a.module.graph() == c.module.graph());
    CHECK(a.w.values == c.w.values);
    auto d = sample_sparse_lift(bp, config(300, 300, 4.0, 43));
    CHECK_FALSE(a.module.graph() == d.module.graph());
}

TEST_CASE("every lifted edge projects to a base edge") {
    std::mt19937_64 rng(5);
    auto bp = fixtures::random_blueprint(rng, 3, "sum_tanh");
    SparseLiftConfig cfg;
    cfg.dims.assign(bp->num_vertices(), 20);
    for (int b : bp->inputs()) cfg.dims[b] = 1;
    cfg.lambda.assign(bp->num_edges(), 3.0);
    auto sl = sample_sparse_lift(bp, cfg);
    validate_homomorphism(sl.module.projection_map());
}

TEST_CASE("mean in-degree and binomial in-degree law") {
    auto bp = two_vertex(100, 100);
    std::vector<long long> hist(101, 0);
    double total = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        auto sl = sample_sparse_lift(bp, config(100, 100, 5.0, s));
        auto ds = degree_summary(sl.module);
        CHECK(ds.edges[0].mean_in == static_cast<double>(sl.module.num_edges()) / 100.0);
        total += ds.edges[0].mean_in;
        for (int v : sl.module.fibre(1)) ++hist[sl.module.graph().in_degree(v)];
    }
    const double mean = total / seeds;
    CHECK(std::abs(mean - 5.0) <= 0.15);

    // Chi-square goodness of fit against Binomial(100, 0.05); tail bins with
    // expected count below 5 are merged.
    const double n = 100.0 * seeds;
    std::vector<double> obs, expd;
    double o_acc = 0, e_acc = 0;
    for (int k = 0; k <= 100; ++k) {
        o_acc += hist[k];
        e_acc += n * binom_pmf(100, k, 0.05);
        if (e_acc >= 5) {
            obs.push_back(o_acc);
            expd.push_back(e_acc);
            o_acc = e_acc = 0;
        }
    }
    if (e_acc > 0) {
        obs.back() += o_acc;
        expd.back() += e_acc;
    }
    double chi2 = 0;
    for (size_t i = 0; i < obs.size(); ++i) chi2 += (obs[i] - expd[i]) * (obs[i] - expd[i]) / expd[i];
    const double df = static_cast<double>(obs.size()) - 1;
    const double pvalue = gamma_q(df / 2, chi2 / 2);
    CAPTURE(chi2);
    CAPTURE(df);
    CHECK(pvalue > 0.001);
}

TEST_CASE("degree bound and ratio") {
    CHECK(degree_bound(200, 200, 8.0, 1, 0.1) == doctest::Approx(56 + std::log(200.0) - std::log(0.1)));
    auto bp = two_vertex(50, 20);
    auto sl = sample_sparse_lift(bp, config(50, 20, 3.0, 9));
    std::vector<double> lam{3.0};
    auto ds = degree_summary(sl.module, lam, 0.1);
    CHECK(ds.ratio[1] == doctest::Approx(ds.edges[0].max_out * 50.0 / 20.0));
    CHECK(ds.edges[0].within == (ds.edges[0].max_out <= ds.edges[0].bound));
}

TEST_CASE("weight initialisation is standard normal by default and overridable") {
    auto bp = two_vertex(200, 200);
    auto sl = sample_sparse_lift(bp, config(200, 200, 200.0, 3));
    double m = 0, v = 0;
    for (double w : sl.w.values) m += w;
    m /= sl.w.values.size();
    for (double w : sl.w.values) v += (w - m) * (w - m);
    v /= sl.w.values.size();
    CHECK(std::abs(m) < 0.01);
    CHECK(std::abs(v - 1.0) < 0.02);
    auto cfg = config(200, 200, 200.0, 3);
    cfg.init = {WeightInit{2.0, 0.5}};
    auto shifted = sample_sparse_lift(bp, cfg);
    for (size_t i = 0; i < 10; ++i) CHECK(shifted.w.values[i] == doctest::Approx(2.0 + 0.5 * sl.w.values[i]));
}
