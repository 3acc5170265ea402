#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "liftlab/blueprint.hpp"
#include "liftlab/errors.hpp"
#include "liftlab/evaluate.hpp"
#include "liftlab/lifted_module.hpp"

using namespace liftlab;

namespace {

std::string bp_path(const std::string& name) { return std::string(LIFTLAB_BLUEPRINT_DIR) + "/" + name; }

std::shared_ptr<const Blueprint> load(const std::string& name) {
    return std::make_shared<const Blueprint>(load_blueprint(bp_path(name)));
}

// Dense matrix MLP: f_{l+1} = act(f_l W_l), the last layer with identity.
std::vector<double> dense_mlp(const std::vector<int>& widths, const std::vector<std::vector<double>>& mats,
                              std::vector<double> f, double (*act)(double)) {
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        std::vector<double> g(widths[l + 1], 0.0);
        for (int j = 0; j < widths[l + 1]; ++j) {
            double s = 0;
            for (int i = 0; i < widths[l]; ++i) s += f[i] * mats[l][i * widths[l + 1] + j];
            g[j] = (l + 2 == widths.size()) ? s : act(s);
        }
        f = std::move(g);
    }
    return f;
}

double tanh_fn(double x) { return std::tanh(x); }

}  // namespace

TEST_CASE("bundled blueprints validate") {
    for (const char* f : {"mlp3.blueprint.json", "transformer.blueprint.json", "conv.blueprint.json",
                          "onedim_sin.blueprint.json", "onedim_relu.blueprint.json", "mnist.blueprint.json"}) {
        CAPTURE(f);
        CHECK_NOTHROW(load(f));
    }
    auto mnist = load("mnist.blueprint.json");
    CHECK(mnist->names_of(0).size() == 784);
    CHECK(mnist->names()[5].name == "px:5");
}

TEST_CASE("blueprint validation catches structural problems") {
    BlueprintSpec s;
    s.vertices = {BaseVertexSpec{"a", 1, {}, true, false, 1}, BaseVertexSpec{"b", 1, {"sum_tanh"}, true, true, 1}};
    s.edges = {BaseEdgeSpec{0, 1, 1, 1, {"mul"}}};
    auto rep = validate_blueprint(s);
    CHECK_FALSE(rep.ok());
    CHECK(rep.describe().find("initial vertex has parents") != std::string::npos);
    CHECK_THROWS_AS(build_blueprint(s), ValidationError);

    s.vertices[1].initial = false;
    CHECK(validate_blueprint(s).ok());
    s.edges[0].z_dim = 2;
    CHECK_FALSE(validate_blueprint(s).ok());
    s.edges[0].z_dim = 1;
    s.edges[0].m.name = "nope";
    CHECK(validate_blueprint(s).describe().find("unknown edge primitive") != std::string::npos);
    s.edges[0].m.name = "mul";
    s.vertices[1].sigma.name = "";
    CHECK(validate_blueprint(s).describe().find("no sigma") != std::string::npos);
}

TEST_CASE("blueprint parser reports field paths") {
    nlohmann::json j = {{"vertices", {{{"id", 0}, {"y_dim", "x"}}}}};
    try {
        parse_blueprint(j);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("/vertices/0/y_dim") != std::string::npos);
    }
    auto spec = parse_blueprint(nlohmann::json::parse(R"({"vertices":[{"id":1,"sigma":"sum_relu","terminal":true},
        {"id":0,"initial":true}],"edges":[{"src":0,"dst":1,"m":"mul"}]})"));
    CHECK(spec.vertices[0].initial);
    CHECK(spec.vertices[1].sigma.name == "sum_relu");
    auto round = parse_blueprint(blueprint_to_json(spec));
    CHECK(round.vertices.size() == 2);
    CHECK(round.edges[0].m.name == "mul");
}

TEST_CASE("pullback of sections") {
    Section s(Bundle({1, 2, 9}));
    for (size_t i = 0; i < s.values.size(); ++i) s.values[i] = 0.5 * static_cast<double>(i);
    std::vector<int> id{0, 1, 2};
    CHECK(pullback(s, id).values == s.values);

    std::vector<int> fig{0, 0, 1, 2, 2, 2};
    auto p = pullback(s, fig);
    CHECK(std::vector<int>(p.bundle.dims().begin(), p.bundle.dims().end()) == std::vector<int>{1, 1, 2, 9, 9, 9});
    CHECK(p.at(4)[3] == s.at(2)[3]);

    Section one(Bundle({1}));
    one.values[0] = 1.5;
    std::vector<int> constant{0, 0, 0, 0};
    for (double x : pullback(one, constant).values) CHECK(x == 1.5);
    std::vector<int> bad{3};
    CHECK_THROWS_AS(pullback(s, bad), IndexMismatch);

    // Functoriality: pulling back along g then f equals pulling back along g o f.
    std::vector<int> g{2, 0, 1, 1}, f{3, 3, 0, 2, 1};
    std::vector<int> gf(f.size());
    for (size_t u = 0; u < f.size(); ++u) gf[u] = g[f[u]];
    CHECK(pullback(pullback(s, g), f).values == pullback(s, gf).values);
}

TEST_CASE("lift_module validates projection and naming") {
    auto bp = fixtures::path_blueprint({2, 1}, "sum_identity");
    auto g = Graph::build(3, {{0, 2}, {1, 2}});
    CHECK_NOTHROW(lift_module(bp, g, {0, 0, 1}, {0, 1, -1}));
    CHECK_THROWS_AS(lift_module(bp, g, {0, 0, 1}, {0, 0, -1}), BadInputNaming);
    CHECK_THROWS_AS(lift_module(bp, g, {0, 0, 1}, {0, -1, -1}), BadInputNaming);
    CHECK_THROWS_AS(lift_module(bp, g, {0, 0, 1}, {0, 1, 0}), BadInputNaming);
    CHECK_THROWS_AS(lift_module(bp, g, {0, 1, 0}, {0, -1, 1}), BadHomomorphism);
}

TEST_CASE("fully-connected lift of the mlp3 path blueprint") {
    auto bp = load("mlp3.blueprint.json");
    auto lm = fully_connected_lift(bp);
    CHECK(lm.num_vertices() == 18);
    CHECK(lm.num_edges() == 3 * 5 + 5 * 6 + 6 * 4);
    CHECK(lm.weight_bundle().total() == 3 * 5 + 5 * 6 + 6 * 4);
    validate_homomorphism(lm.projection_map());

    auto two = fixtures::path_blueprint({2, 3}, "sum_identity");
    CHECK(fully_connected_lift(two).num_edges() == 6);

    std::vector<int> ones(4, 1);  // the input width is fixed by the name list
    CHECK_THROWS_AS(fully_connected_lift(bp, ones), ConfigError);
    std::vector<int> zero{3, 0, 6, 4};
    CHECK_THROWS_AS(fully_connected_lift(bp, zero), ConfigError);

    auto single = fixtures::path_blueprint({1, 1, 1}, "sum_tanh");
    auto iso = fully_connected_lift(single);
    CHECK(iso.graph() == single->graph());
}

TEST_CASE("forward on small modules") {
    auto bp = fixtures::path_blueprint({1, 1}, "sum_identity");
    auto lm = fully_connected_lift(bp);
    Section w(lm.weight_bundle(), 1.0);
    auto x = make_inputs(lm, {{"l0:0", {3.0}}});
    auto tape = forward(lm, w, x);
    CHECK(tape.act.at(1)[0] == 3.0);
    CHECK_THROWS_AS(make_inputs(lm, {}), MissingInput);
    CHECK_THROWS_AS(make_inputs(lm, {{"l0:0", {1.0, 2.0}}}), ShapeMismatch);
    CHECK_THROWS_AS(forward(lm, Section(Bundle({1, 1})), x), ShapeMismatch);
}

TEST_CASE("constant vertex contributes a bias") {
    auto bp = load("onedim_sin.blueprint.json");
    std::vector<int> dims{1, 1, 2, 1, 1};
    auto lm = fully_connected_lift(bp, dims);
    Section w(lm.weight_bundle());
    // Hidden j: sin(w_x x + w_b); output: sum_j v_j h_j / sqrt(2) + c.
    const double wx[2] = {0.3, -0.7}, wb[2] = {0.1, 0.4}, v[2] = {1.5, -2.0}, c = 0.25, xv = 1.3;
    auto off = class_offsets(*bp, dims);
    for (int e = 0; e < lm.num_edges(); ++e) {
        const Edge& ed = lm.graph().edge(e);
        const int be = lm.base_edge(e);
        const Edge& bed = bp->graph().edge(be);
        const int i = ed.src - off[bed.src], j = ed.dst - off[bed.dst];
        double val = 0;
        if (bed.src == 0) val = wx[j];
        if (bed.src == 1) val = wb[j];
        if (bed.src == 2) val = v[i];
        if (bed.src == 3) val = c;
        w.at(e)[0] = val;
    }
    auto tape = forward(lm, w, make_inputs(lm, {{"x", {xv}}}));
    const double expect = (v[0] * std::sin(wx[0] * xv + wb[0]) + v[1] * std::sin(wx[1] * xv + wb[1])) / std::sqrt(2.0) + c;
    CHECK(tape.act.at(lm.terminals()[0])[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("fully-connected lift matches a dense matrix MLP") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        std::vector<int> widths;
        const int layers = std::uniform_int_distribution<int>(2, 4)(rng);
        for (int l = 0; l < layers; ++l) widths.push_back(std::uniform_int_distribution<int>(1, 32)(rng));
        auto bp = fixtures::path_blueprint(widths, "sum_tanh", "sum_identity");
        auto lm = fully_connected_lift(bp, widths);
        std::vector<std::vector<double>> mats(layers - 1);
        std::normal_distribution<double> nd;
        for (int l = 0; l + 1 < layers; ++l) {
            mats[l].resize(widths[l] * widths[l + 1]);
            for (double& m : mats[l]) m = nd(rng) / std::sqrt(widths[l]);
        }
        auto off = class_offsets(*bp, widths);
        Section w(lm.weight_bundle());
        for (int e = 0; e < lm.num_edges(); ++e) {
            const Edge& ed = lm.graph().edge(e);
            const int l = lm.pi(ed.src);
            w.at(e)[0] = mats[l][(ed.src - off[l]) * widths[l + 1] + (ed.dst - off[l + 1])];
        }
        auto x = fixtures::random_inputs(lm, rng);
        auto tape = forward(lm, w, x);
        auto ref = dense_mlp(widths, mats, x.values, tanh_fn);
        auto fib = lm.fibre(layers - 1);
        for (size_t j = 0; j < fib.size(); ++j) CHECK(std::abs(tape.act.at(fib[j])[0] - ref[j]) <= 1e-12);
        auto again = forward(lm, w, x);
        CHECK(again.act.values == tape.act.values);
    }
}

TEST_CASE("linear readout") {
    auto bp = fixtures::path_blueprint({1, 4}, "sum_identity");
    auto lm = fully_connected_lift(bp);
    Section act(lm.activation_bundle(), 1.0);
    auto a = zero_readout(lm, 1);
    CHECK(linear_readout(lm, a, act)[0] == 0.0);
    for (double& c : a.coeffs.values) c = 1.0;
    CHECK(linear_readout(lm, a, act)[0] == doctest::Approx(2.0).epsilon(1e-15));

    // Naive double loop and linearity on a random vector-valued instance.
    auto tbp = std::make_shared<const Blueprint>(load_blueprint(std::string(LIFTLAB_BLUEPRINT_DIR) + "/transformer.blueprint.json"));
    auto tlm = fully_connected_lift(tbp);
    std::mt19937_64 rng(5);
    auto acts = fixtures::random_section(tlm.activation_bundle(), rng);
    const int k = 3;
    auto ra = zero_readout(tlm, k), rb = zero_readout(tlm, k);
    ra.coeffs = fixtures::random_section(ra.coeffs.bundle, rng);
    rb.coeffs = fixtures::random_section(rb.coeffs.bundle, rng);
    auto out = linear_readout(tlm, ra, acts);
    for (int i = 0; i < k; ++i) {
        double naive = 0;
        for (int b : tbp->terminals()) {
            double inner = 0;
            for (int v : tlm.fibre(b)) {
                int t = 0;
                while (tlm.terminals()[t] != v) ++t;
                for (int d = 0; d < tlm.y_dim(v); ++d) inner += ra.coeffs.at(t)[i * tlm.y_dim(v) + d] * acts.at(v)[d];
            }
            naive += inner / std::sqrt(static_cast<double>(tlm.class_size(b)));
        }
        CHECK(std::abs(out[i] - naive) <= 1e-12);
    }
    auto mix = zero_readout(tlm, k);
    for (size_t q = 0; q < mix.coeffs.values.size(); ++q)
        mix.coeffs.values[q] = 0.7 * ra.coeffs.values[q] - 1.3 * rb.coeffs.values[q];
    auto lhs = linear_readout(tlm, mix, acts);
    auto ob = linear_readout(tlm, rb, acts);
    for (int i = 0; i < k; ++i) CHECK(std::abs(lhs[i] - (0.7 * out[i] - 1.3 * ob[i])) <= 1e-12);
}

TEST_CASE("identity lift reproduces the base module") {
    std::mt19937_64 rng(9);
    auto bp = fixtures::random_blueprint(rng, 3, "sum_sin");
    std::vector<int> pi(bp->num_vertices()), names(bp->num_vertices(), -1);
    for (int b = 0; b < bp->num_vertices(); ++b) {
        pi[b] = b;
        if (bp->is_input(b)) names[b] = bp->names_of(b)[0];
    }
    auto lm = lift_module(bp, bp->graph(), pi, names);
    auto fc = fully_connected_lift(bp, std::vector<int>(bp->num_vertices(), 1));
    auto w = fixtures::random_section(lm.weight_bundle(), rng);
    auto x = fixtures::random_inputs(lm, rng);
    auto a = forward(lm, w, x);
    // The width-one lift has the same vertices up to relabelling.
    Section wf(fc.weight_bundle());
    auto off = class_offsets(*bp, std::vector<int>(bp->num_vertices(), 1));
    for (int e = 0; e < fc.num_edges(); ++e) wf.at(e)[0] = w.at(fc.base_edge(e))[0];
    auto b = forward(fc, wf, x);
    for (int v = 0; v < bp->num_vertices(); ++v) CHECK(a.act.at(v)[0] == b.act.at(off[v])[0]);
}

TEST_CASE("morphisms preserve activations on planted unfoldings") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 10; ++t) {
        auto bp = fixtures::random_blueprint(rng, 3, t % 2 ? "sum_tanh" : "sum_sin");
        liftlab::SparseLiftConfig cfg;
        cfg.dims.assign(bp->num_vertices(), 3);
        for (int b : bp->inputs()) cfg.dims[b] = 1;
        cfg.lambda.assign(bp->num_edges(), 2.0);
        cfg.seed = t;
        auto h = sample_sparse_lift(bp, cfg);
        auto u = fixtures::unfold(h.module, h.w, rng);
        REQUIRE(validate_fibration({u.g.graph(), h.module.graph(), u.phi}).ok());
        auto x = fixtures::random_inputs(h.module, rng, 2.0);
        auto fh = forward(h.module, h.w, x);
        auto fg = forward(u.g, u.w, x);
        for (int v = 0; v < u.g.num_vertices(); ++v) CHECK(std::abs(fg.act.at(v)[0] - fh.act.at(u.phi[v])[0]) <= 1e-12);
    }
}
