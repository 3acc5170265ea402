#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "liftlab/autodiff.hpp"
#include "liftlab/errors.hpp"
#include "liftlab/primitives.hpp"
#include "liftlab/sparse_lift.hpp"

using namespace liftlab;
using nlohmann::json;

namespace {

std::vector<double> rand_vec(std::mt19937_64& rng, size_t n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct EdgeCase {
    std::string name;
    json params;
    int w, y, z;
};

struct VertexCase {
    std::string name;
    json params;
    std::vector<int> classes;
    int y;
};

const std::vector<EdgeCase> kEdgeCases = {
    {"mul", {}, 1, 1, 1},
    {"scale", {}, 1, 4, 4},
    {"pair_scale", {}, 2, 3, 6},
    {"copy", {}, 0, 5, 5},
    {"pair_mul", {}, 1, 1, 2},
    {"conv2d_nopad", {{"height", 6}, {"width", 5}}, 9, 30, 12},
};

const std::vector<VertexCase> kVertexCases = {
    {"one", {}, {}, 2},
    {"sum_identity", {}, {3, 3}, 3},
    {"sum_relu", {}, {3, 3}, 3},
    {"sum_tanh", {}, {2}, 2},
    {"sum_sin", {}, {2, 2, 2}, 2},
    {"sqrt_bias_readout", {}, {2, 1}, 1},
    {"outer", {}, {6}, 9},
    {"add_soft_mul", {}, {6, 9}, 3},
    {"max_relu", {}, {4, 4}, 1},
};

// Pushes inputs away from the ReLU kink and keeps counts positive.
void sanitize(const std::string& name, std::vector<std::vector<double>>& z) {
    if (name == "sqrt_bias_readout") z[0][1] = 1.0 + std::abs(z[0][1]) * 3;
    if (name == "sum_relu" || name == "max_relu")
        for (auto& c : z)
            for (double& x : c)
                if (std::abs(x) < 0.05) x += 0.1;
}

}  // namespace

TEST_CASE("registry lookups and examples") {
    auto mul = make_edge_op("mul");
    std::vector<double> w{2}, y{3}, z(1);
    mul->eval(w, y, z);
    CHECK(z[0] == 6.0);
    CHECK_THROWS_AS(make_edge_op("nope"), UnknownPrimitive);
    CHECK_THROWS_AS(registry_lookup("nope"), UnknownPrimitive);
    CHECK(registry_lookup("sum_relu").vertex);
    CHECK(registry_lookup("pair_mul").edge);

    auto conv = make_edge_op("conv2d_nopad", {{"height", 16}, {"width", 16}});
    CHECK(conv->check_signature(25, 256, 144).empty());
    CHECK_FALSE(conv->check_signature(25, 256, 100).empty());
    CHECK(make_edge_op("conv2d_nopad")->check_signature(25, 144, 64).empty());

    // A = 0, n = 2: every row of the softmax is uniform.
    auto asm_op = make_vertex_op("add_soft_mul");
    CHECK(asm_op->check_signature(std::vector<int>{4, 4}, 2).empty());
    std::vector<double> xy{1.0, -2.0, 3.0, 5.0}, a(4, 0.0), out(2);
    std::vector<Vec> args{xy, a};
    asm_op->eval(args, out);
    CHECK(out[0] == doctest::Approx(1.0 + 4.0));
    CHECK(out[1] == doctest::Approx(-2.0 + 4.0));

    auto mx = make_vertex_op("max_relu");
    std::vector<double> s{1.0, 3.0, 3.0, -1.0};
    std::vector<Vec> margs{s};
    std::vector<double> ct(4);
    std::vector<MutVec> cargs{ct};
    std::vector<double> one{1.0};
    mx->vjp(margs, one, cargs);
    CHECK(ct == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("edge primitives: finite differences and adjoint identity") {
    std::mt19937_64 rng(1);
    for (const auto& c : kEdgeCases) {
        CAPTURE(c.name);
        auto op = make_edge_op(c.name, c.params);
        REQUIRE(op->check_signature(c.w, c.y, c.z).empty());
        for (int probe = 0; probe < 100; ++probe) {
            auto w = rand_vec(rng, c.w, 2), y = rand_vec(rng, c.y, 2);
            auto ct = rand_vec(rng, c.z), dw = rand_vec(rng, c.w), dy = rand_vec(rng, c.y);
            std::vector<double> ctw(c.w, 0.0), cty(c.y, 0.0), dz(c.z);
            op->vjp(w, y, ct, ctw, cty);
            op->jvp(w, y, dw, dy, dz);
            CHECK(std::abs(dotv(ct, dz) - (dotv(ctw, dw) + dotv(cty, dy))) <= 1e-10);
            if (probe < 5) {
                // Central difference of <ct, M(w + h dw, y + h dy)>.
                const double h = 1e-5;
                std::vector<double> wp = w, wm = w, yp = y, ym = y, zp(c.z), zm(c.z);
                for (int i = 0; i < c.w; ++i) wp[i] += h * dw[i], wm[i] -= h * dw[i];
                for (int i = 0; i < c.y; ++i) yp[i] += h * dy[i], ym[i] -= h * dy[i];
                op->eval(wp, yp, zp);
                op->eval(wm, ym, zm);
                const double fd = (dotv(ct, zp) - dotv(ct, zm)) / (2 * h);
                const double an = dotv(ct, dz);
                CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(an)));
            }
        }
    }
}

TEST_CASE("vertex primitives: finite differences and adjoint identity") {
    std::mt19937_64 rng(2);
    for (const auto& c : kVertexCases) {
        CAPTURE(c.name);
        auto op = make_vertex_op(c.name, c.params);
        REQUIRE(op->check_signature(c.classes, c.y).empty());
        for (int probe = 0; probe < 100; ++probe) {
            std::vector<std::vector<double>> z, dz, ctz;
            for (int d : c.classes) {
                z.push_back(rand_vec(rng, d, 2));
                dz.push_back(rand_vec(rng, d));
                ctz.emplace_back(d, 0.0);
            }
            sanitize(c.name, z);
            if (c.name == "sqrt_bias_readout") dz[0][1] = 0.0;
            std::vector<Vec> zs(z.begin(), z.end()), dzs(dz.begin(), dz.end());
            std::vector<MutVec> cts(ctz.begin(), ctz.end());
            auto ct = rand_vec(rng, c.y);
            std::vector<double> dy(c.y);
            op->vjp(zs, ct, cts);
            op->jvp(zs, dzs, dy);
            double rhs = 0;
            for (size_t a = 0; a < z.size(); ++a) rhs += dotv(ctz[a], dz[a]);
            CHECK(std::abs(dotv(ct, dy) - rhs) <= 1e-10);
            if (probe < 5) {
                const double h = 1e-5;
                auto zp = z, zm = z;
                for (size_t a = 0; a < z.size(); ++a)
                    for (size_t i = 0; i < z[a].size(); ++i) zp[a][i] += h * dz[a][i], zm[a][i] -= h * dz[a][i];
                std::vector<Vec> zps(zp.begin(), zp.end()), zms(zm.begin(), zm.end());
                std::vector<double> yp(c.y), ym(c.y);
                op->eval(zps, yp);
                op->eval(zms, ym);
                const double fd = (dotv(ct, yp) - dotv(ct, ym)) / (2 * h);
                CHECK(std::abs(fd - dotv(ct, dy)) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("deviation bounds dominate sampled deviations") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u01(0, 1);
    auto in_ball = [&](const std::vector<double>& c, double r) {
        auto d = rand_vec(rng, c.size());
        double n = std::sqrt(dotv(d, d));
        auto out = c;
        const double s = n > 0 ? r * u01(rng) / n : 0.0;
        for (size_t i = 0; i < c.size(); ++i) out[i] += s * d[i];
        return out;
    };
    for (const auto& c : kEdgeCases) {
        auto op = make_edge_op(c.name, c.params);
        for (int t = 0; t < 200; ++t) {
            auto w = rand_vec(rng, c.w, 2), y = rand_vec(rng, c.y, 2);
            const double eta = u01(rng), r = u01(rng);
            auto w2 = in_ball(w, eta), y2 = in_ball(y, r);
            std::vector<double> z(c.z), z2(c.z);
            op->eval(w, y, z);
            op->eval(w2, y2, z2);
            double dev = 0;
            for (int i = 0; i < c.z; ++i) dev += (z[i] - z2[i]) * (z[i] - z2[i]);
            CHECK(std::sqrt(dev) <= op->deviation_bound(w, y, eta, r) + 1e-12);
        }
    }
    for (const auto& c : kVertexCases) {
        if (c.name == "sqrt_bias_readout") continue;  // covered with a fixed count below
        auto op = make_vertex_op(c.name, c.params);
        for (int t = 0; t < 200; ++t) {
            std::vector<std::vector<double>> z, z2;
            std::vector<double> radii;
            for (int d : c.classes) {
                z.push_back(rand_vec(rng, d, 2));
                radii.push_back(u01(rng));
                z2.push_back(in_ball(z.back(), radii.back()));
            }
            std::vector<Vec> a(z.begin(), z.end()), b(z2.begin(), z2.end());
            std::vector<double> y(c.y), y2(c.y);
            op->eval(a, y);
            op->eval(b, y2);
            double dev = 0;
            for (int i = 0; i < c.y; ++i) dev += (y[i] - y2[i]) * (y[i] - y2[i]);
            CHECK(std::sqrt(dev) <= op->deviation_bound(a, radii) + 1e-12);
        }
    }
    auto sb = make_vertex_op("sqrt_bias_readout");
    std::vector<double> p{1.5, 4.0}, b{0.3}, p2{1.5 + 0.2, 4.0}, b2{0.3 - 0.1}, y(1), y2(1);
    std::vector<Vec> a1{p, b}, a2{p2, b2};
    sb->eval(a1, y);
    sb->eval(a2, y2);
    std::vector<double> radii{0.2, 0.1};
    CHECK(std::abs(y[0] - y2[0]) <= sb->deviation_bound(a1, radii) + 1e-15);
    CHECK(sb->deviation_bound(a1, radii) == doctest::Approx(0.2 / 2 + 0.1));
}

TEST_CASE("module gradients: finite differences, adjoint identity and cost") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 6; ++t) {
        auto bp = fixtures::random_blueprint(rng, 3, t % 2 ? "sum_tanh" : "sum_sin");
        SparseLiftConfig cfg;
        cfg.dims.assign(bp->num_vertices(), 4);
        for (int b : bp->inputs()) cfg.dims[b] = 1;
        cfg.lambda.assign(bp->num_edges(), 2.0);
        cfg.seed = 100 + t;
        cfg.k = 2;
        auto sl = sample_sparse_lift(bp, cfg);
        const auto& lm = sl.module;
        Params p{sl.w, sl.a};
        p.a.coeffs = fixtures::random_section(p.a.coeffs.bundle, rng);
        auto x = fixtures::random_inputs(lm, rng, 2.0);
        std::vector<double> ct = rand_vec(rng, 2);

        OpCounter fwd, bwd;
        forward(lm, p.w, x, &fwd);
        auto g = backward(lm, p, x, ct, &bwd);
        CHECK(bwd.total() <= 3 * fwd.total());

        auto objective = [&](const Params& q) {
            auto tape = forward(lm, q.w, x);
            auto out = linear_readout(lm, q.a, tape.act);
            return dotv(ct, out);
        };
        const double h = 1e-5;
        double num = 0, den = 0;
        for (size_t i = 0; i < p.w.values.size(); ++i) {
            Params qp = p, qm = p;
            qp.w.values[i] += h;
            qm.w.values[i] -= h;
            const double fd = (objective(qp) - objective(qm)) / (2 * h);
            num += (fd - g.w.values[i]) * (fd - g.w.values[i]);
            den += fd * fd;
        }
        for (size_t i = 0; i < p.a.coeffs.values.size(); ++i) {
            Params qp = p, qm = p;
            qp.a.coeffs.values[i] += h;
            qm.a.coeffs.values[i] -= h;
            const double fd = (objective(qp) - objective(qm)) / (2 * h);
            num += (fd - g.a.coeffs.values[i]) * (fd - g.a.coeffs.values[i]);
            den += fd * fd;
        }
        CHECK(std::sqrt(num) <= 1e-5 * std::max(std::sqrt(den), 1e-12));

        for (int probe = 0; probe < 100; ++probe) {
            Params tg{fixtures::random_section(p.w.bundle, rng), Readout{2, fixtures::random_section(p.a.coeffs.bundle, rng)}};
            auto d = jvp_forward(lm, p, x, tg);
            const double lhs = dotv(ct, d);
            const double rhs = dotv(g.w.values, tg.w.values) + dotv(g.a.coeffs.values, tg.a.coeffs.values);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
        }
        Params zero{Section(p.w.bundle), Readout{2, Section(p.a.coeffs.bundle)}};
        for (double v : jvp_forward(lm, p, x, zero)) CHECK(v == 0.0);
        Params only_a{Section(p.w.bundle), Readout{2, fixtures::random_section(p.a.coeffs.bundle, rng)}};
        auto tape = forward(lm, p.w, x);
        auto want = linear_readout(lm, only_a.a, tape.act);
        auto got = jvp_forward(lm, p, x, only_a);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-14);
    }
}

TEST_CASE("simple gradients") {
    auto bp = fixtures::path_blueprint({1, 4}, "sum_identity");
    auto lm = fully_connected_lift(bp);
    Params p{Section(lm.weight_bundle(), 1.0), zero_readout(lm, 1)};
    auto x = make_inputs(lm, {{"l0:0", {0.7}}});
    std::vector<double> one{1.0};
    auto g = backward(lm, p, x, one);
    for (double ga : g.a.coeffs.values) CHECK(ga == doctest::Approx(0.7 / 2.0));
    for (double& c : p.a.coeffs.values) c = 1.0;
    auto g2 = backward(lm, p, x, one);
    for (double gw : g2.w.values) CHECK(gw == doctest::Approx(0.7 / 2.0));
}

TEST_CASE("gradients through the transformer block and convolution blueprints") {
    std::mt19937_64 rng(17);
    for (const char* f : {"transformer.blueprint.json", "conv.blueprint.json"}) {
        CAPTURE(f);
        auto bp = std::make_shared<const Blueprint>(load_blueprint(std::string(LIFTLAB_BLUEPRINT_DIR) + "/" + f));
        auto lm = fully_connected_lift(bp);
        Params p{fixtures::random_section(lm.weight_bundle(), rng, 0.5), zero_readout(lm, 1)};
        p.a.coeffs = fixtures::random_section(p.a.coeffs.bundle, rng);
        auto x = fixtures::random_inputs(lm, rng);
        std::vector<double> ct{1.0};
        auto g = backward(lm, p, x, ct);
        for (int probe = 0; probe < 20; ++probe) {
            Params tg{fixtures::random_section(p.w.bundle, rng), Readout{1, fixtures::random_section(p.a.coeffs.bundle, rng)}};
            const double lhs = jvp_forward(lm, p, x, tg)[0];
            const double rhs = dotv(g.w.values, tg.w.values) + dotv(g.a.coeffs.values, tg.a.coeffs.values);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
        }
    }
}
