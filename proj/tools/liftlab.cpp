// liftlab command-line interface.
//
// Exit codes: 0 success, 1 configuration or input error, 2 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "liftlab/blueprint.hpp"
#include "liftlab/errors.hpp"
#include "liftlab/experiment.hpp"
#include "liftlab/graph.hpp"
#include "liftlab/idx.hpp"
#include "liftlab/rng.hpp"
#include "liftlab/sparse_lift.hpp"
#include "liftlab/theory.hpp"
#include "liftlab/train.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace liftlab;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool plots = false;
    bool paper_scale = false;
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string config_dir(const std::string& path) { return fs::path(path).parent_path().string(); }

void write_text(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << body;
    std::cout << "wrote " << path.string() << "\n";
}

void set_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

// "label=n,label=n" over the blueprint's vertex labels.
std::vector<int> parse_dims(const Blueprint& bp, const std::string& spec) {
    std::vector<int> dims = resolve_lift_dims(bp);
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--dims entries look like label=width, got '" + item + "'");
        const std::string label = item.substr(0, eq);
        int b = -1;
        for (int v = 0; v < bp.num_vertices(); ++v)
            if (bp.vertex(v).label == label) b = v;
        if (b < 0) throw ConfigError("no base vertex labelled '" + label + "'");
        try {
            dims[b] = std::stoi(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad width in '" + item + "'");
        }
    }
    return resolve_lift_dims(bp, dims);
}

std::vector<int> dims_from_json(const Blueprint& bp, const json& j) {
    std::vector<int> dims = resolve_lift_dims(bp);
    if (j.is_null()) return dims;
    if (j.is_array()) return resolve_lift_dims(bp, j.get<std::vector<int>>());
    if (!j.is_object()) throw ConfigError("dims must be a list or an object keyed by vertex label");
    for (auto it = j.begin(); it != j.end(); ++it) {
        int b = -1;
        for (int v = 0; v < bp.num_vertices(); ++v)
            if (bp.vertex(v).label == it.key()) b = v;
        if (b < 0) throw ConfigError("dims: no base vertex labelled '" + it.key() + "'");
        dims[b] = it.value().get<int>();
    }
    return resolve_lift_dims(bp, dims);
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
    BlueprintSpec spec;
    try {
        spec = parse_blueprint(read_json(path));
    } catch (const ParseError& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return 1;
    }
    ValidationReport rep = validate_blueprint(spec);
    for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
    if (!rep.ok()) {
        for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
        return 1;
    }
    Blueprint bp = build_blueprint(spec);
    std::cout << path << ": ok, " << bp.num_vertices() << " vertices, " << bp.num_edges() << " edges, "
              << bp.num_names() << " input names" << (bp.smooth() ? "" : ", non-smooth primitives") << "\n";
    return 0;
}

int cmd_lift(const std::string& path, const std::string& dims_spec, const CommonFlags& f) {
    auto bp = std::make_shared<const Blueprint>(load_blueprint(path));
    SparseLiftConfig lc;
    lc.dims = parse_dims(*bp, dims_spec);
    lc.seed = f.seed;
    lc.threads = f.threads;
    SparseLift sl = sample_sparse_lift(bp, lc);
    for (const auto& w : sl.warnings) std::cerr << "warning: " << w << "\n";
    DegreeSummary ds = degree_summary(sl.module, blueprint_lambda(*bp));
    json edges = json::array();
    for (int e = 0; e < bp->num_edges(); ++e) {
        const auto& s = ds.edges[e];
        edges.push_back({{"base_edge", e},
                         {"src", bp->vertex(bp->graph().edge(e).src).label},
                         {"dst", bp->vertex(bp->graph().edge(e).dst).label},
                         {"keep_probability", sl.keep_probability[e]},
                         {"in_degree", {{"min", s.min_in}, {"max", s.max_in}, {"mean", s.mean_in}}},
                         {"out_degree", {{"min", s.min_out}, {"max", s.max_out}, {"mean", s.mean_out}}},
                         {"out_degree_bound", s.bound},
                         {"within_bound", s.within}});
    }
    json summary = {{"blueprint", path},   {"seed", f.seed},
                    {"dims", lc.dims},     {"vertices", sl.module.num_vertices()},
                    {"edges", sl.module.num_edges()}, {"parameters", sl.module.weight_bundle().total()},
                    {"edge_classes", edges}, {"warnings", sl.warnings}};
    const fs::path out = f.out.empty() ? fs::path("lift") : fs::path(f.out);
    std::ostringstream el;
    write_edge_list(el, sl.module.graph());
    write_text(out / "lift.edges", el.str());
    write_text(out / "lift.json", summary.dump(2) + "\n");
    return 0;
}

Dataset training_data(const json& data, const std::string& base, std::uint64_t seed) {
    const std::string kind = data.value("kind", "sine");
    if (kind == "sine") return sine_dataset(data.value("samples", 10000), keyed::hash({seed, 0xda7a}));
    if (kind == "mnist") {
        const fs::path dir = resolve_path(base, data.value("dir", std::string()));
        const int limit = data.value("limit", -1);
        return load_mnist_idx((dir / "train-images-idx3-ubyte").string(), (dir / "train-labels-idx1-ubyte").string(),
                              limit);
    }
    throw ConfigError("data.kind must be 'sine' or 'mnist'");
}

int cmd_train(const CommonFlags& f) {
    if (f.config.empty()) throw ConfigError("train needs --config");
    const json j = read_json(f.config);
    const std::string base = config_dir(f.config);
    auto bp = std::make_shared<const Blueprint>(load_blueprint(resolve_path(base, j.value("blueprint", std::string()))));
    const std::uint64_t seed = f.seed_set ? f.seed : j.value("seed", std::uint64_t{0});
    SparseLiftConfig lc;
    lc.dims = dims_from_json(*bp, j.value("dims", json()));
    lc.seed = seed;
    SparseLift sl = sample_sparse_lift(bp, lc);
    for (const auto& w : sl.warnings) std::cerr << "warning: " << w << "\n";
    Dataset ds = training_data(j.value("data", json::object()), base, seed);

    const std::string loss = j.value("loss", "squared");
    if (loss != "squared" && loss != "cross_entropy") throw ConfigError("loss must be 'squared' or 'cross_entropy'");
    ModuleObjective obj(sl.module, ds, Head::Terminal,
                        loss == "squared" ? LossKind::Squared : LossKind::SoftmaxCrossEntropy, Backend::Auto, f.threads);
    const json opt = j.value("optimizer", json::object());
    const std::string kind = opt.value("kind", "adam");
    Trajectory tr;
    try {
        if (kind == "gradient_flow") {
            tr = run_gradient_flow(obj, sl.w.values, opt.value("step", 1e-3), opt.value("horizon", 1.0),
                                   opt.value("record_every", 1LL));
        } else if (kind == "adam" || kind == "sgd") {
            OptimizerConfig oc;
            oc.kind = kind == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
            oc.step = opt.value("step", 1e-2);
            oc.batch = opt.value("batch", 10);
            oc.iters = opt.value("iters", 1000LL);
            oc.record_every = opt.value("record_every", std::max<long long>(oc.iters / 100, 1));
            oc.seed = keyed::hash({seed, 0xba7c});
            tr = run_optimizer(obj, sl.w.values, oc);
        } else {
            throw ConfigError("optimizer.kind must be 'adam', 'sgd' or 'gradient_flow'");
        }
    } catch (const NonFiniteLoss& e) {
        std::cerr << "error: " << e.what() << "\n";
        tr = e.partial;
    }
    const fs::path out = f.out.empty() ? fs::path(resolve_path(base, j.value("output", std::string("train")))) : fs::path(f.out);
    std::ostringstream csv;
    write_trajectory_csv(csv, tr);
    write_text(out / "trajectory.csv", csv.str());
    json summary = {{"method", tr.method},
                    {"records", tr.size()},
                    {"initial_loss", tr.losses.front()},
                    {"final_loss", tr.losses.back()},
                    {"final_dist_from_init", tr.dist.back()}};
    if (j.contains("criterion")) {
        const double eps = j["criterion"].value("epsilon", 0.0);
        const double kappa = j["criterion"].value("kappa", 1.0);
        Certificate c = check_convergence_criterion(tr, eps, kappa);
        summary["criterion"] = {{"epsilon", eps},
                                {"kappa", kappa},
                                {"pass", c.pass},
                                {"heuristic", c.heuristic},
                                {"worst_margin", c.worst_margin},
                                {"first_violation_time", c.first_violation < 0 ? json() : json(c.first_violation_time)}};
    }
    write_text(out / "train.json", summary.dump(2) + "\n");
    std::cout << "final loss " << tr.losses.back() << "\n";
    return std::isfinite(tr.losses.back()) ? 0 : 2;
}

int cmd_cover(const CommonFlags& f) {
    if (f.config.empty()) throw ConfigError("cover needs --config");
    const json j = read_json(f.config);
    const std::string base = config_dir(f.config);
    if (!j.contains("witness")) throw ConfigError("cover config needs a witness");
    WitnessSpec wit = parse_witness(j["witness"], base);
    const int width = j.value("width", 100);
    const double eta = j.value("eta", 1.0);
    const std::uint64_t seed = f.seed_set ? f.seed : j.value("seed", std::uint64_t{0});
    auto dims = cover_dims(*wit.bp, width);
    AlphaParams al = alpha_parameter(wit.lm, wit.w, blueprint_lambda(*wit.bp), blueprint_init(*wit.bp), eta, dims,
                                     j.value("mc_samples", 100000));
    CoverSearch cs = cover_trial(wit, width, eta, al.alpha, seed);
    json out = {{"width", width}, {"seed", seed}, {"eta", eta}, {"found", cs.found}};
    if (cs.found) out["morphism"] = cs.morphism.to_json();
    else out["blocking_vertex"] = cs.blocking_vertex, out["reason"] = cs.reason;
    const fs::path dir = f.out.empty() ? fs::path(resolve_path(base, j.value("output", std::string("cover")))) : fs::path(f.out);
    write_text(dir / "morphism.json", out.dump(2) + "\n");
    std::cout << (cs.found ? "covering morphism found" : "no covering morphism: " + cs.reason) << "\n";
    return 0;
}

ExperimentConfig experiment_config(const std::string& kind, const CommonFlags& f) {
    if (f.config.empty()) throw ConfigError("--config is required");
    json j = read_json(f.config);
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    if (!j.contains("experiment")) j["experiment"] = kind;
    if (j["experiment"] != kind)
        throw ConfigError("config describes '" + j["experiment"].get<std::string>() + "', not '" + kind + "'");
    ExperimentConfig cfg = parse_experiment_config(j, config_dir(f.config), f.paper_scale);
    if (!f.out.empty()) cfg.output = f.out;
    if (f.seed_set) cfg.seed = f.seed;
    cfg.threads = f.threads;
    cfg.plots = f.plots;
    return cfg;
}

int cmd_experiment(const std::string& kind, const CommonFlags& f) {
    parse_kind(kind);
    ExperimentConfig cfg = experiment_config(kind, f);
    EmitResult r = run_experiment(cfg);
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& p : r.files) std::cout << "wrote " << p << "\n";
    return 0;
}

int cmd_graph_info(const std::string& path) {
    Graph g = load_edge_list(path);
    int initial = 0, terminal = 0;
    for (int v = 0; v < g.num_vertices(); ++v) {
        initial += g.is_initial(v);
        terminal += g.is_terminal(v);
    }
    std::cout << "vertices " << g.num_vertices() << "\nedges " << g.num_edges() << "\ninitial " << initial
              << "\nterminal " << terminal << "\ntopological order";
    for (int v : g.topological_order()) std::cout << ' ' << v;
    std::cout << "\n";
    return 0;
}

int cmd_graph_fibration(const std::string& src, const std::string& dst, const std::string& map_path) {
    VertexMap f{load_edge_list(src), load_edge_list(dst), {}};
    std::ifstream in(map_path);
    if (!in) throw IoError("cannot open " + map_path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        int v;
        while (ls >> v) f.image.push_back(v);
    }
    try {
        validate_homomorphism(f);
    } catch (const NotAHomomorphism& e) {
        std::cout << "not a homomorphism: " << e.what() << "\n";
        return 2;
    }
    FibrationReport rep = validate_fibration(f);
    if (rep.ok()) {
        std::cout << "fibration\n";
        return 0;
    }
    std::cout << "homomorphism but not a fibration\n" << rep.describe();
    return 2;
}

int run(int argc, char** argv) {
    CLI::App app{"Perceptron modules, random sparse lifts and their covering theory"};
    app.require_subcommand(1);
    CommonFlags f;
    auto common = [&](CLI::App* sub, bool config) {
        if (config) sub->add_option("--config", f.config, "Configuration file (JSON)")->required();
        sub->add_option("--out", f.out, "Output directory");
        sub->add_option("--seed", f.seed, "Base seed")->each([&](const std::string&) { f.seed_set = true; });
        sub->add_option("--threads", f.threads, "Worker threads (0 keeps the OpenMP default)");
    };

    std::string bp_path, dims_spec;
    auto* validate = app.add_subcommand("validate", "Parse and validate a blueprint file");
    validate->add_option("blueprint", bp_path, "Blueprint JSON")->required();

    auto* lift = app.add_subcommand("lift", "Sample a random sparse lift and dump its graph");
    lift->add_option("blueprint", bp_path, "Blueprint JSON")->required();
    lift->add_option("--dims", dims_spec, "Widths as label=n,label=n");
    common(lift, false);

    auto* train = app.add_subcommand("train", "Train one lift and write its trajectory");
    common(train, true);

    auto* cover = app.add_subcommand("cover", "Search one sampled lift for a covering of a witness");
    common(cover, true);

    auto* theory = app.add_subcommand("theory", "Compute the threshold constants for a witness");
    common(theory, true);

    std::string g1, g2, gmap;
    auto* graph = app.add_subcommand("graph", "Edge-list utilities");
    graph->require_subcommand(1);
    auto* ginfo = graph->add_subcommand("info", "Print counts and a topological order");
    ginfo->add_option("edges", g1, "Edge-list file")->required();
    auto* gfib = graph->add_subcommand("fibration", "Check a vertex map between two edge lists");
    gfib->add_option("source", g1, "Source edge list")->required();
    gfib->add_option("target", g2, "Target edge list")->required();
    gfib->add_option("map", gmap, "Images of the source vertices, whitespace separated")->required();

    std::string kind;
    auto* exp = app.add_subcommand("experiment", "Run an experiment described by a configuration file");
    exp->add_option("kind", kind, "sine-quantiles | mnist-compare | witness-cover | theory-report")
        ->required()
        ->check(CLI::IsMember({"sine-quantiles", "mnist-compare", "witness-cover", "theory-report"}));
    common(exp, true);
    exp->add_flag("--plots", f.plots, "Also write SVG plots");
    exp->add_flag("--paper-scale", f.paper_scale, "Use full iteration counts and width lists");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    set_threads(f.threads);

    if (*validate) return cmd_validate(bp_path);
    if (*lift) return cmd_lift(bp_path, dims_spec, f);
    if (*train) return cmd_train(f);
    if (*cover) return cmd_cover(f);
    if (*theory) return cmd_experiment("theory-report", f);
    if (*ginfo) return cmd_graph_info(g1);
    if (*gfib) return cmd_graph_fibration(g1, g2, gmap);
    if (*exp) return cmd_experiment(kind, f);
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "invalid blueprint: " << e.what() << "\n";
        return 1;
    } catch (const UnknownPrimitive& e) {
        std::cerr << "invalid blueprint: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
