#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "liftlab/errors.hpp"
#include "liftlab/experiment.hpp"

using namespace liftlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kBlueprints = LIFTLAB_BLUEPRINT_DIR;

json sine_config(int seeds, long long iters) {
    return {{"experiment", "sine-quantiles"},
            {"blueprint", kBlueprints + "/onedim_sin.blueprint.json"},
            {"widths", {10, 3}},
            {"seeds", seeds},
            {"samples", 200},
            {"optimizer", {{"kind", "adam"}, {"step", 0.01}, {"batch", 10}, {"iters", iters}}}};
}

json star_witness() {
    return {{"blueprint", kBlueprints + "/witness_star.blueprint.json"},
            {"dims", {1, 1, 1, 1, 1}},
            {"edges",
             {{{"edge", 0}, {"i", 0}, {"j", 0}, {"w", {0.0}}},
              {{"edge", 1}, {"i", 0}, {"j", 0}, {"w", {0.5}}},
              {{"edge", 2}, {"i", 0}, {"j", 0}, {"w", {-0.5}}},
              {{"edge", 3}, {"i", 0}, {"j", 0}, {"w", {1.0}}}}},
            {"readout", {1.0, 1.0, 1.0, 1.0}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("liftlab_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("quantiles interpolate between order statistics") {
    std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 5.0);
    CHECK(quantile(v, 0.5) == 3.0);
    CHECK(quantile(v, 0.25) == 2.0);
    CHECK(quantile(v, 0.1) == doctest::Approx(1.4));
    CHECK(quantile({7.0}, 0.9) == 7.0);

    QuantileRow r = quantile_row(4, {0.3, 9.0, 0.1, 2.5, 0.7, 0.2});
    CHECK(r.p10 <= r.p25);
    CHECK(r.p25 <= r.p50);
    CHECK(r.p50 <= r.p75);
    CHECK(r.p75 <= r.p90);

    std::ostringstream os;
    write_quantile_csv(os, {r});
    CHECK(os.str().rfind("width,p10,p25,p50,p75,p90\n4,", 0) == 0);
}

TEST_CASE("sine data matches the target curve") {
    Dataset ds = sine_dataset(500, 3);
    REQUIRE(ds.size() == 500);
    for (int i = 0; i < ds.size(); ++i) {
        const double x = ds.input(i)[0];
        CHECK((x >= 0.0 && x < 100.0));
        CHECK(ds.target(i)[0] == doctest::Approx(2.0 * std::sin(0.5 * x + 0.42)).epsilon(1e-14));
    }
    CHECK(sine_dataset(500, 3).inputs == ds.inputs);
    CHECK(sine_dataset(500, 4).inputs != ds.inputs);
}

TEST_CASE("configuration parsing") {
    auto base = sine_config(2, 50);
    ExperimentConfig c = parse_experiment_config(base, "");
    CHECK(c.kind == ExperimentKind::SineQuantiles);
    CHECK(c.widths == std::vector<int>{3, 10});
    CHECK(c.optimizer.iters == 50);

    auto defaults = base;
    defaults["optimizer"].erase("iters");
    CHECK(parse_experiment_config(defaults, "").optimizer.iters == 20000);
    CHECK(parse_experiment_config(defaults, "", true).optimizer.iters == 100000);

    auto wide = base;
    wide["widths"] = {5, 2048};
    wide["paper_widths"] = {5, 100, 4096};
    CHECK(parse_experiment_config(wide, "").widths == std::vector<int>{5});
    CHECK(parse_experiment_config(wide, "", true).widths == std::vector<int>{5, 100, 4096});

    auto rel = base;
    rel["blueprint"] = "bp.json";
    CHECK(fs::path(parse_experiment_config(rel, "/some/dir").blueprint) == fs::path("/some/dir/bp.json"));

    auto bad = base;
    bad["seeds"] = 0;
    CHECK_THROWS_AS(parse_experiment_config(bad, ""), ConfigError);
    bad = base;
    bad["widths"] = json::array();
    CHECK_THROWS_AS(parse_experiment_config(bad, ""), ConfigError);
    bad = base;
    bad["experiment"] = "histogram";
    CHECK_THROWS_AS(parse_experiment_config(bad, ""), ConfigError);
    bad = base;
    bad["widths"] = "ten";
    CHECK_THROWS(parse_experiment_config(bad, ""));
    CHECK_THROWS_AS(parse_kind("nope"), ConfigError);
    CHECK(kind_name(parse_kind("witness-cover")) == "witness-cover");
}

TEST_CASE("iters = 0 reports initial losses") {
    auto j = sine_config(1, 0);
    j["widths"] = {6};
    ExperimentConfig c = parse_experiment_config(j, "");
    auto rows = run_sine_quantiles(c);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].losses.size() == 1);
    CHECK(rows[0].p10 == rows[0].p90);
    CHECK(rows[0].losses[0] > 0.1);  // an untrained net is far from the sine
}

TEST_CASE("experiments are byte reproducible") {
    ExperimentConfig c = parse_experiment_config(sine_config(3, 40), "");
    c.plots = true;
    c.output = scratch("repro_a").string();
    EmitResult a = run_experiment(c);
    c.output = scratch("repro_b").string();
    c.threads = 1;
    EmitResult b = run_experiment(c);
    REQUIRE(a.files.size() == 3);
    for (size_t i = 0; i < a.files.size(); ++i) CHECK(slurp(a.files[i]) == slurp(b.files[i]));
    CHECK(slurp(fs::path(a.files[0])).rfind("width,p10,p25,p50,p75,p90\n3,", 0) == 0);

    c.seed = 99;
    c.output = scratch("repro_c").string();
    EmitResult d = run_experiment(c);
    CHECK(slurp(d.files[0]) != slurp(a.files[0]));
}

TEST_CASE("empty result sets write nothing") {
    auto j = sine_config(1, 10);
    j["widths"] = {4096};
    ExperimentConfig c = parse_experiment_config(j, "");
    c.output = scratch("empty").string();
    EmitResult r = run_experiment(c);
    CHECK(r.files.empty());
    CHECK(r.warnings.size() == 1);
    CHECK(!fs::exists(c.output));
}

TEST_CASE("witness parsing") {
    WitnessSpec w = parse_witness(star_witness(), "");
    CHECK(w.lm.num_vertices() == 5);
    CHECK(w.lm.num_edges() == 4);
    CHECK(w.a.k == 1);
    CHECK(w.w.values == std::vector<double>{0.0, 0.5, -0.5, 1.0});

    auto bad = star_witness();
    bad["readout"] = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(parse_witness(bad, ""), ConfigError);
    bad = star_witness();
    bad["edges"][0]["w"] = {1.0, 2.0};
    CHECK_THROWS(parse_witness(bad, ""));
    bad = star_witness();
    bad["edges"][0]["j"] = 4;
    CHECK_THROWS(parse_witness(bad, ""));
}

TEST_CASE("witness cover rows") {
    json j = {{"experiment", "witness-cover"}, {"witness", star_witness()}, {"widths", {40, 80}},
              {"seeds", 10},                   {"eta", 1.0},                {"mc_samples", 1000}};
    ExperimentConfig c = parse_experiment_config(j, "");
    auto rows = run_witness_cover(c);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.trials == 10);
        CHECK(r.frequency == doctest::Approx(r.successes / 10.0));
        CHECK((r.bound >= 0.0 && r.bound <= 1.0));
    }
    CHECK(rows[0].bound <= rows[1].bound);
    std::ostringstream os;
    write_cover_csv(os, rows);
    CHECK(os.str().rfind("width,trials,successes,frequency,bound\n40,10,", 0) == 0);
}

TEST_CASE("mnist parameter counts are exact edge counts") {
    auto dense_bp = std::make_shared<const Blueprint>(load_blueprint(kBlueprints + "/mnist_dense.blueprint.json"));
    auto sparse_bp = std::make_shared<const Blueprint>(load_blueprint(kBlueprints + "/mnist.blueprint.json"));
    MnistModel d = mnist_dense_model(dense_bp, 8, 1);
    // 784 * 8 + 8 + 8 * 8 + 8 + 8 * 10 + 10
    CHECK(d.lm.weight_bundle().total() == 6442);
    MnistModel s = mnist_sparse_model(sparse_bp, 8, 3.0, 1);
    CHECK(s.lm.weight_bundle().total() == s.lm.num_edges());
    CHECK(s.lm.num_edges() < 6442);

    std::ostringstream os;
    write_mnist_csv(os, {{"dense", 8, 0.0, 6442, 0.5}});
    CHECK(os.str() == "family,width,lambda,parameters,accuracy\ndense,8,0,6442,0.5\n");
}

TEST_CASE("theory report from a configuration") {
    json wit = star_witness();
    json j = {{"experiment", "theory-report"}, {"witness", wit},     {"target", {{"kind", "witness"}}},
              {"epsilon", 0.1},                {"widths", {500}},    {"inputs", {{"count", 20}, {"low", -1}, {"high", 1}}},
              {"mc_samples", 1000}};
    ExperimentConfig c = parse_experiment_config(j, "");
    TheoryReport r = run_theory_report(c);
    CHECK(r.eps0 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r.Lambda > 0);
    j["target"] = {{"kind", "square"}};
    CHECK_THROWS_AS(run_theory_report(parse_experiment_config(j, "")), ConfigError);
}
