#include "liftlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "liftlab/errors.hpp"
#include "liftlab/idx.hpp"
#include "liftlab/plot.hpp"
#include "liftlab/rng.hpp"
#include "liftlab/sparse_lift.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace liftlab {

namespace fs = std::filesystem;

namespace {

constexpr long long kDeskIters = 20000;
constexpr long long kPaperIters = 100000;
constexpr int kDeskMaxWidth = 1024;

int workers(int threads) {
#ifdef _OPENMP
    return threads > 0 ? threads : omp_get_max_threads();
#else
    (void)threads;
    return 1;
#endif
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

bool is_bias_source(const Blueprint& bp, int b) {
    return !bp.is_input(b) && bp.vertex(b).sigma.name == "one";
}

// Non-input, non-terminal classes that are not constant sources take `width`.
std::vector<int> width_dims(const Blueprint& bp, int width) {
    std::vector<int> dims = resolve_lift_dims(bp);
    for (int b = 0; b < bp.num_vertices(); ++b)
        if (!bp.is_input(b) && !bp.is_terminal(b) && !is_bias_source(bp, b)) dims[b] = width;
    return dims;
}

std::shared_ptr<const Blueprint> load_shared(const std::string& path) {
    return std::make_shared<const Blueprint>(load_blueprint(path));
}

std::uint64_t data_seed(std::uint64_t seed) { return keyed::hash({seed, 0xda7a}); }

std::uint64_t trial_seed(std::uint64_t seed, int width, int s) {
    return keyed::hash({seed, static_cast<std::uint64_t>(width), static_cast<std::uint64_t>(s)});
}

void write_file(const fs::path& path, const std::string& body, EmitResult& out) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << body;
    if (!f) throw IoError("failed writing " + path.string());
    out.files.push_back(path.string());
}

}  // namespace

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base_dir) / path).lexically_normal().string();
}

WitnessSpec parse_witness(const nlohmann::json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ConfigError("witness must be an object");
    WitnessSpec out;
    const auto bp_path = field<std::string>(j, "blueprint", "");
    if (bp_path.empty()) throw ConfigError("witness.blueprint is required");
    out.bp = load_shared(resolve_path(base_dir, bp_path));
    const Blueprint& bp = *out.bp;
    auto dims = field<std::vector<int>>(j, "dims", {});
    if (static_cast<int>(dims.size()) != bp.num_vertices())
        throw ConfigError("witness.dims needs one width per base vertex (" + std::to_string(bp.num_vertices()) + ")");
    for (int b = 0; b < bp.num_vertices(); ++b)
        if (bp.is_input(b) && dims[b] != static_cast<int>(bp.names_of(b).size()))
            throw ConfigError("witness.dims[" + std::to_string(b) + "] must equal the number of input names");
    if (!j.contains("edges") || !j["edges"].is_array()) throw ConfigError("witness.edges must be a list");
    std::vector<ClassEdge> edges;
    std::vector<std::vector<double>> weights;
    for (const auto& e : j["edges"]) {
        ClassEdge ce{field<int>(e, "edge", -1), field<int>(e, "i", -1), field<int>(e, "j", -1)};
        if (ce.base_edge < 0 || ce.base_edge >= bp.num_edges()) throw ConfigError("witness edge has a bad base edge id");
        const Edge& be = bp.graph().edge(ce.base_edge);
        if (ce.i < 0 || ce.i >= dims[be.src] || ce.j < 0 || ce.j >= dims[be.dst])
            throw ConfigError("witness edge endpoint outside its class");
        auto w = field<std::vector<double>>(e, "w", {});
        if (static_cast<int>(w.size()) != bp.w_dim(ce.base_edge))
            throw ConfigError("witness edge weight must have dimension " + std::to_string(bp.w_dim(ce.base_edge)));
        edges.push_back(ce);
        weights.push_back(std::move(w));
    }
    out.lm = layered_lift(out.bp, dims, edges);
    out.w = Section(out.lm.weight_bundle());
    auto off = class_offsets(bp, dims);
    for (size_t k = 0; k < edges.size(); ++k) {
        const Edge& be = bp.graph().edge(edges[k].base_edge);
        const int id = out.lm.graph().find_edge(off[be.src] + edges[k].i, off[be.dst] + edges[k].j);
        std::copy(weights[k].begin(), weights[k].end(), out.w.at(id).begin());
    }
    int per_row = 0;
    for (int t : out.lm.terminals()) per_row += out.lm.y_dim(t);
    auto readout = field<std::vector<double>>(j, "readout", std::vector<double>(per_row, 1.0));
    if (per_row == 0 || readout.empty() || readout.size() % per_row != 0)
        throw ConfigError("witness.readout must hold k * " + std::to_string(per_row) + " values");
    const int k = static_cast<int>(readout.size()) / per_row;
    out.a = zero_readout(out.lm, k);
    // Stored per terminal as k blocks of y_dim; the file lists rows of all terminals.
    int col = 0;
    for (size_t t = 0; t < out.lm.terminals().size(); ++t) {
        const int d = out.lm.y_dim(out.lm.terminals()[t]);
        auto dst = out.a.coeffs.at(static_cast<int>(t));
        for (int i = 0; i < k; ++i)
            for (int c = 0; c < d; ++c) dst[i * d + c] = readout[static_cast<size_t>(i) * per_row + col + c];
        col += d;
    }
    return out;
}

std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::SineQuantiles: return "sine-quantiles";
        case ExperimentKind::MnistCompare: return "mnist-compare";
        case ExperimentKind::WitnessCover: return "witness-cover";
        case ExperimentKind::TheoryReport: return "theory-report";
    }
    return "";
}

ExperimentKind parse_kind(const std::string& s) {
    for (auto k : {ExperimentKind::SineQuantiles, ExperimentKind::MnistCompare, ExperimentKind::WitnessCover,
                   ExperimentKind::TheoryReport})
        if (kind_name(k) == s) return k;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir, bool paper_scale) {
    if (!j.is_object()) throw ConfigError("experiment configuration must be a JSON object");
    ExperimentConfig c;
    c.base_dir = base_dir;
    c.paper_scale = paper_scale;
    c.kind = parse_kind(field<std::string>(j, "experiment", ""));
    c.blueprint = resolve_path(base_dir, field<std::string>(j, "blueprint", ""));
    c.dense_blueprint = resolve_path(base_dir, field<std::string>(j, "dense_blueprint", ""));
    c.widths = field<std::vector<int>>(j, "widths", {});
    if (paper_scale && j.contains("paper_widths")) c.widths = field<std::vector<int>>(j, "paper_widths", {});
    c.lambdas = field<std::vector<double>>(j, "lambdas", {});
    c.seeds = field<int>(j, "seeds", 1);
    if (paper_scale && j.contains("paper_seeds")) c.seeds = field<int>(j, "paper_seeds", c.seeds);
    c.output = resolve_path(base_dir, field<std::string>(j, "output", "results"));
    c.seed = field<std::uint64_t>(j, "seed", 0);
    c.samples = field<int>(j, "samples", 10000);
    c.mnist_dir = resolve_path(base_dir, field<std::string>(j, "mnist_dir", ""));
    c.train_limit = field<int>(j, "train_limit", -1);
    c.test_limit = field<int>(j, "test_limit", -1);
    if (j.contains("witness")) c.witness = j["witness"];
    c.eta = field<double>(j, "eta", 1.0);
    c.mc_samples = field<int>(j, "mc_samples", 100000);
    c.epsilon = field<double>(j, "epsilon", 0.0);
    c.delta = field<double>(j, "delta", 0.1);
    c.target = j.value("target", nlohmann::json{{"kind", "witness"}});
    if (j.contains("inputs")) {
        const auto& in = j["inputs"];
        c.input_count = field<int>(in, "count", c.input_count);
        c.input_low = field<double>(in, "low", c.input_low);
        c.input_high = field<double>(in, "high", c.input_high);
    }

    const auto opt = j.value("optimizer", nlohmann::json::object());
    const auto kind = field<std::string>(opt, "kind", "adam");
    if (kind == "adam") c.optimizer.kind = OptimizerKind::Adam;
    else if (kind == "sgd") c.optimizer.kind = OptimizerKind::Sgd;
    else throw ConfigError("optimizer.kind must be 'adam' or 'sgd'");
    c.optimizer.step = field<double>(opt, "step", c.kind == ExperimentKind::MnistCompare ? 1e-3 : 1e-2);
    c.optimizer.batch = field<int>(opt, "batch", c.kind == ExperimentKind::MnistCompare ? 100 : 10);
    c.optimizer.iters = paper_scale ? kPaperIters : field<long long>(opt, "iters", kDeskIters);
    c.optimizer.record_every = field<long long>(opt, "record_every", 0);
    if (c.optimizer.record_every <= 0) c.optimizer.record_every = std::max<long long>(c.optimizer.iters, 1);

    if (c.seeds < 1) throw ConfigError("seeds must be at least 1");
    const bool needs_widths = c.kind != ExperimentKind::TheoryReport;
    if (needs_widths && c.widths.empty()) throw ConfigError("widths must be a nonempty list");
    for (int w : c.widths)
        if (w < 1) throw ConfigError("widths must be positive");
    if (!paper_scale) c.widths.erase(std::remove_if(c.widths.begin(), c.widths.end(), [](int w) { return w > kDeskMaxWidth; }),
                                     c.widths.end());
    std::sort(c.widths.begin(), c.widths.end());
    c.widths.erase(std::unique(c.widths.begin(), c.widths.end()), c.widths.end());
    if ((c.kind == ExperimentKind::SineQuantiles || c.kind == ExperimentKind::MnistCompare) && c.blueprint.empty())
        throw ConfigError("blueprint is required");
    if (c.kind == ExperimentKind::MnistCompare && c.dense_blueprint.empty())
        throw ConfigError("dense_blueprint is required for mnist-compare");
    if ((c.kind == ExperimentKind::WitnessCover || c.kind == ExperimentKind::TheoryReport) && c.witness.is_null())
        throw ConfigError("witness is required");
    if (c.kind == ExperimentKind::TheoryReport && !(c.epsilon > 0)) throw ConfigError("epsilon must be positive");
    if (!(c.eta > 0)) throw ConfigError("eta must be positive");
    if (c.samples < 1) throw ConfigError("samples must be positive");
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path, bool paper_scale) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_experiment_config(j, fs::path(path).parent_path().string(), paper_scale);
}

// ---------------------------------------------------------------------------

Dataset sine_dataset(int n, std::uint64_t seed) {
    Dataset ds;
    for (int i = 0; i < n; ++i) {
        const double x = 100.0 * keyed::uniform(keyed::hash({seed, static_cast<std::uint64_t>(i)}));
        const double y = 2.0 * std::sin(0.5 * x + 0.42);
        ds.push(std::span<const double>(&x, 1), std::span<const double>(&y, 1));
    }
    return ds;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyDataset("quantile of an empty list");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0 || lo + 1 >= values.size()) return values[lo];
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

QuantileRow quantile_row(int width, std::vector<double> losses) {
    QuantileRow r;
    r.width = width;
    r.p10 = quantile(losses, 0.10);
    r.p25 = quantile(losses, 0.25);
    r.p50 = quantile(losses, 0.50);
    r.p75 = quantile(losses, 0.75);
    r.p90 = quantile(losses, 0.90);
    r.losses = std::move(losses);
    return r;
}

double sine_trial(std::shared_ptr<const Blueprint> bp, const Dataset& ds, int width, std::uint64_t seed,
                  const OptimizerConfig& opt) {
    SparseLiftConfig lc;
    lc.dims = width_dims(*bp, width);
    lc.seed = seed;
    lc.threads = 1;
    SparseLift sl = sample_sparse_lift(bp, lc);
    ModuleObjective obj(sl.module, ds, Head::Terminal, LossKind::Squared, Backend::Auto, 1);
    OptimizerConfig oc = opt;
    oc.seed = keyed::hash({seed, 0xba7c});
    try {
        return run_optimizer(obj, sl.w.values, oc).losses.back();
    } catch (const NonFiniteLoss&) {
        return std::numeric_limits<double>::infinity();
    }
}

std::vector<QuantileRow> run_sine_quantiles(const ExperimentConfig& cfg) {
    auto bp = load_shared(cfg.blueprint);
    const Dataset ds = sine_dataset(cfg.samples, data_seed(cfg.seed));
    const int nw = static_cast<int>(cfg.widths.size());
    std::vector<double> losses(static_cast<size_t>(nw) * cfg.seeds);
    const int tasks = static_cast<int>(losses.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers(cfg.threads))
    for (int t = 0; t < tasks; ++t) {
        const int w = cfg.widths[t / cfg.seeds], s = t % cfg.seeds;
        losses[t] = sine_trial(bp, ds, w, trial_seed(cfg.seed, w, s), cfg.optimizer);
    }
    std::vector<QuantileRow> rows;
    for (int i = 0; i < nw; ++i)
        rows.push_back(quantile_row(cfg.widths[i], std::vector<double>(losses.begin() + i * cfg.seeds,
                                                                       losses.begin() + (i + 1) * cfg.seeds)));
    return rows;
}

void write_quantile_csv(std::ostream& os, const std::vector<QuantileRow>& rows) {
    os << "width,p10,p25,p50,p75,p90\n";
    for (const auto& r : rows)
        os << r.width << ',' << fmt(r.p10) << ',' << fmt(r.p25) << ',' << fmt(r.p50) << ',' << fmt(r.p75) << ','
           << fmt(r.p90) << '\n';
}

// ---------------------------------------------------------------------------

MnistModel mnist_dense_model(std::shared_ptr<const Blueprint> dense_bp, int width, std::uint64_t seed) {
    const Blueprint& bp = *dense_bp;
    SparseLiftConfig lc;
    lc.dims = width_dims(bp, width);
    lc.seed = seed;
    for (int e = 0; e < bp.num_edges(); ++e) {
        const int a = bp.graph().edge(e).src;
        lc.init.push_back(is_bias_source(bp, a) ? WeightInit{0.0, 1.0}
                                                : WeightInit{0.0, 1.0 / std::sqrt(static_cast<double>(lc.dims[a]))});
    }
    SparseLift sl = sample_sparse_lift(dense_bp, lc);
    return {std::move(sl.module), std::move(sl.w)};
}

MnistModel mnist_sparse_model(std::shared_ptr<const Blueprint> sparse_bp, int width, double lambda, std::uint64_t seed) {
    const Blueprint& bp = *sparse_bp;
    SparseLiftConfig lc;
    lc.dims = width_dims(bp, width);
    lc.seed = seed;
    for (int e = 0; e < bp.num_edges(); ++e) {
        const auto& be = bp.edge(e);
        const int a = bp.graph().edge(e).src;
        if (be.lift_mode == LiftMode::Dense) lc.lambda.push_back(lc.dims[a]);
        else if (is_bias_source(bp, a)) lc.lambda.push_back(be.lambda);
        else lc.lambda.push_back(lambda);
    }
    SparseLift sl = sample_sparse_lift(sparse_bp, lc);
    return {std::move(sl.module), std::move(sl.w)};
}

double classification_accuracy(const MnistModel& m, std::span<const double> theta, const Dataset& test) {
    ModuleObjective obj(m.lm, test, Head::Terminal, LossKind::SoftmaxCrossEntropy);
    auto pred = obj.predict(theta);
    const int k = obj.output_dim();
    int correct = 0;
    for (int i = 0; i < test.size(); ++i) {
        auto row = std::span<const double>(pred).subspan(static_cast<size_t>(i) * k, k);
        auto y = test.target(i);
        correct += std::max_element(row.begin(), row.end()) - row.begin() ==
                   std::max_element(y.begin(), y.end()) - y.begin();
    }
    return static_cast<double>(correct) / test.size();
}

MnistRow mnist_trial(const std::string& family, const MnistModel& m, double lambda, const Dataset& train,
                     const Dataset& test, const OptimizerConfig& opt, int threads) {
    ModuleObjective obj(m.lm, train, Head::Terminal, LossKind::SoftmaxCrossEntropy, Backend::Auto, threads);
    Trajectory tr = run_optimizer(obj, m.w.values, opt);
    MnistRow row;
    row.family = family;
    row.lambda = lambda;
    row.parameters = m.lm.weight_bundle().total();
    row.accuracy = classification_accuracy(m, tr.theta, test);
    return row;
}

std::vector<MnistRow> run_mnist_compare(const ExperimentConfig& cfg) {
    if (cfg.mnist_dir.empty()) throw ConfigError("mnist_dir is required for mnist-compare");
    const fs::path dir(cfg.mnist_dir);
    const Dataset train = load_mnist_idx((dir / "train-images-idx3-ubyte").string(),
                                         (dir / "train-labels-idx1-ubyte").string(), cfg.train_limit);
    const Dataset test = load_mnist_idx((dir / "t10k-images-idx3-ubyte").string(),
                                        (dir / "t10k-labels-idx1-ubyte").string(), cfg.test_limit);
    auto dense_bp = load_shared(cfg.dense_blueprint);
    auto sparse_bp = load_shared(cfg.blueprint);
    std::vector<MnistRow> rows;
    auto average = [&](const std::string& family, double lambda, int width, auto make) {
        MnistRow acc;
        for (int s = 0; s < cfg.seeds; ++s) {
            const std::uint64_t seed = trial_seed(cfg.seed, width, s);
            OptimizerConfig oc = cfg.optimizer;
            oc.seed = keyed::hash({seed, 0xba7c});
            MnistRow r = mnist_trial(family, make(seed), lambda, train, test, oc, cfg.threads);
            if (s == 0) acc = r;
            else acc.accuracy += r.accuracy;
        }
        acc.width = width;
        acc.accuracy /= cfg.seeds;
        rows.push_back(acc);
    };
    for (int w : cfg.widths) {
        average("dense", 0.0, w, [&](std::uint64_t s) { return mnist_dense_model(dense_bp, w, s); });
        for (double l : cfg.lambdas)
            average("sparse", l, w, [&](std::uint64_t s) { return mnist_sparse_model(sparse_bp, w, l, s); });
    }
    return rows;
}

void write_mnist_csv(std::ostream& os, const std::vector<MnistRow>& rows) {
    os << "family,width,lambda,parameters,accuracy\n";
    for (const auto& r : rows)
        os << r.family << ',' << r.width << ',' << fmt(r.lambda) << ',' << r.parameters << ',' << fmt(r.accuracy) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<int> cover_dims(const Blueprint& bp, int width) {
    std::vector<int> dims = resolve_lift_dims(bp);
    for (int b = 0; b < bp.num_vertices(); ++b)
        if (!bp.is_input(b)) dims[b] = width;
    return dims;
}

CoverSearch cover_trial(const WitnessSpec& wit, int width, double eta, std::span<const double> alpha,
                        std::uint64_t seed) {
    SparseLiftConfig lc;
    lc.dims = cover_dims(*wit.bp, width);
    lc.seed = seed;
    lc.threads = 1;
    SparseLift sl = sample_sparse_lift(wit.bp, lc);
    CoverSearch cs = find_covering_morphism(sl.module, sl.w, wit.lm, wit.w, alpha, eta);
    if (cs.found) {
        CoverReport rep = verify_covering(cs.morphism, sl.module, sl.w, wit.lm, wit.w);
        if (!rep.ok()) throw Error("covering search returned an invalid morphism:\n" + rep.describe());
    }
    return cs;
}

std::vector<CoverRow> run_witness_cover(const ExperimentConfig& cfg) {
    const WitnessSpec wit = parse_witness(cfg.witness, cfg.base_dir);
    const Blueprint& bp = *wit.bp;
    std::vector<double> lambda = cfg.lambdas.empty() ? blueprint_lambda(bp) : cfg.lambdas;
    if (static_cast<int>(lambda.size()) != bp.num_edges()) throw ConfigError("lambdas must list one value per base edge");
    std::vector<CoverRow> rows;
    for (int width : cfg.widths) {
        auto dims = cover_dims(bp, width);
        AlphaParams al = alpha_parameter(wit.lm, wit.w, lambda, blueprint_init(bp), cfg.eta, dims, cfg.mc_samples);
        CoverRow row;
        row.width = width;
        row.trials = cfg.seeds;
        row.bound = covering_probability_bound(wit.lm, al.alpha, dims);
        std::vector<char> found(cfg.seeds, 0);
#pragma omp parallel for schedule(dynamic) num_threads(workers(cfg.threads))
        for (int s = 0; s < cfg.seeds; ++s) found[s] = cover_trial(wit, width, cfg.eta, al.alpha, trial_seed(cfg.seed, width, s)).found;
        row.successes = static_cast<int>(std::count(found.begin(), found.end(), 1));
        row.frequency = static_cast<double>(row.successes) / row.trials;
        rows.push_back(row);
    }
    return rows;
}

void write_cover_csv(std::ostream& os, const std::vector<CoverRow>& rows) {
    os << "width,trials,successes,frequency,bound\n";
    for (const auto& r : rows)
        os << r.width << ',' << r.trials << ',' << r.successes << ',' << fmt(r.frequency) << ',' << fmt(r.bound) << '\n';
}

// ---------------------------------------------------------------------------

TheoryInputs theory_inputs(const ExperimentConfig& cfg, const WitnessSpec& wit) {
    TheoryInputs in;
    in.witness = &wit.lm;
    in.wstar = &wit.w;
    in.astar = &wit.a;
    in.delta = cfg.delta;
    in.epsilon = cfg.epsilon;
    in.mc_samples = cfg.mc_samples;
    if (!cfg.lambdas.empty()) in.lambda = cfg.lambdas;
    if (!cfg.widths.empty()) in.dims = cover_dims(*wit.bp, cfg.widths.front());
    if (cfg.input_count < 1) throw ConfigError("inputs.count must be positive");
    const int names = wit.lm.input_bundle().total();
    for (int k = 0; k < cfg.input_count; ++k) {
        Section x(wit.lm.input_bundle());
        for (int c = 0; c < names; ++c) {
            const double u = names == 1 ? (k + 0.5) / cfg.input_count
                                        : keyed::uniform(keyed::hash({cfg.seed, std::uint64_t(k), std::uint64_t(c)}));
            x.values[c] = cfg.input_low + (cfg.input_high - cfg.input_low) * u;
        }
        in.X.push_back(std::move(x));
    }
    const std::string kind = field<std::string>(cfg.target, "kind", "witness");
    for (const Section& x : in.X) {
        if (kind == "witness") {
            in.fstar.push_back(linear_readout(wit.lm, wit.a, forward(wit.lm, wit.w, x).act));
        } else if (kind == "sine") {
            const double a = field<double>(cfg.target, "amplitude", 1.0), om = field<double>(cfg.target, "omega", 1.0),
                         ph = field<double>(cfg.target, "phase", 0.0);
            in.fstar.push_back(std::vector<double>(wit.a.k, a * std::sin(om * x.values[0] + ph)));
        } else {
            throw ConfigError("target.kind must be 'witness' or 'sine'");
        }
    }
    return in;
}

TheoryReport run_theory_report(const ExperimentConfig& cfg) {
    const WitnessSpec wit = parse_witness(cfg.witness, cfg.base_dir);
    return threshold_constants(theory_inputs(cfg, wit));
}

// ---------------------------------------------------------------------------

EmitResult run_experiment(const ExperimentConfig& cfg) {
    EmitResult out;
    auto ensure_dir = [&] {
        std::error_code ec;
        fs::create_directories(cfg.output, ec);
        if (ec) throw IoError("cannot create " + cfg.output + ": " + ec.message());
    };
    const fs::path dir(cfg.output);
    if (cfg.kind != ExperimentKind::TheoryReport && cfg.widths.empty()) {
        out.warnings.push_back("no widths left to run at desk scale; nothing written");
        return out;
    }
    switch (cfg.kind) {
        case ExperimentKind::SineQuantiles: {
            auto rows = run_sine_quantiles(cfg);
            if (rows.empty()) break;
            ensure_dir();
            std::ostringstream q, l;
            write_quantile_csv(q, rows);
            l << "width,seed,final_loss\n";
            for (const auto& r : rows)
                for (size_t s = 0; s < r.losses.size(); ++s) l << r.width << ',' << s << ',' << fmt(r.losses[s]) << '\n';
            write_file(dir / "quantiles.csv", q.str(), out);
            write_file(dir / "final_losses.csv", l.str(), out);
            if (cfg.plots) {
                std::vector<BoxStat> boxes;
                for (const auto& r : rows) boxes.push_back({double(r.width), r.p10, r.p25, r.p50, r.p75, r.p90});
                write_file(dir / "quantiles.svg",
                           svg_box_plot({"Final training loss", "Lift dimension", "Final training loss", true, true}, boxes),
                           out);
            }
            break;
        }
        case ExperimentKind::MnistCompare: {
            auto rows = run_mnist_compare(cfg);
            if (rows.empty()) break;
            ensure_dir();
            std::ostringstream os;
            write_mnist_csv(os, rows);
            write_file(dir / "mnist.csv", os.str(), out);
            if (cfg.plots) {
                std::vector<Series> by_width, by_params;
                auto series_for = [&](const MnistRow& r) {
                    std::string name = r.family == "dense" ? "dense" : "sparse lambda=" + fmt(r.lambda);
                    auto it = std::find_if(by_width.begin(), by_width.end(), [&](const Series& s) { return s.name == name; });
                    if (it == by_width.end()) {
                        by_width.push_back({name, {}, {}});
                        by_params.push_back({name, {}, {}});
                        return by_width.size() - 1;
                    }
                    return static_cast<size_t>(it - by_width.begin());
                };
                for (const auto& r : rows) {
                    const size_t k = series_for(r);
                    by_width[k].x.push_back(r.width);
                    by_width[k].y.push_back(r.accuracy);
                    by_params[k].x.push_back(static_cast<double>(r.parameters));
                    by_params[k].y.push_back(r.accuracy);
                }
                write_file(dir / "mnist_width.svg",
                           svg_line_plot({"MNIST test accuracy", "Lift dimension", "Test accuracy", true, false}, by_width), out);
                write_file(dir / "mnist_parameters.svg",
                           svg_line_plot({"MNIST test accuracy", "Parameters", "Test accuracy", true, false}, by_params), out);
            }
            break;
        }
        case ExperimentKind::WitnessCover: {
            auto rows = run_witness_cover(cfg);
            if (rows.empty()) break;
            ensure_dir();
            std::ostringstream os;
            write_cover_csv(os, rows);
            write_file(dir / "cover.csv", os.str(), out);
            if (cfg.plots) {
                Series freq{"success frequency", {}, {}}, bound{"lower bound", {}, {}};
                for (const auto& r : rows) {
                    freq.x.push_back(r.width);
                    freq.y.push_back(r.frequency);
                    bound.x.push_back(r.width);
                    bound.y.push_back(r.bound);
                }
                write_file(dir / "cover.svg",
                           svg_line_plot({"Covering search success", "Lift dimension", "Frequency", true, false}, {freq, bound}),
                           out);
            }
            break;
        }
        case ExperimentKind::TheoryReport: {
            TheoryReport rep = run_theory_report(cfg);
            ensure_dir();
            write_file(dir / "theory.json", rep.to_json().dump(2) + "\n", out);
            break;
        }
    }
    if (out.files.empty()) out.warnings.push_back("experiment produced no results; nothing written");
    return out;
}

}  // namespace liftlab
