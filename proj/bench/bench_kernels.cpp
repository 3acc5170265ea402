// Full-batch loss-and-gradient throughput of the three evaluation paths:
// the reference interpreter, the compiled kernel on one thread and the
// compiled kernel across the OpenMP team.
//
//   bench_kernels [--quick]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "liftlab/blueprint.hpp"
#include "liftlab/experiment.hpp"
#include "liftlab/sparse_lift.hpp"
#include "liftlab/train.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace liftlab;

namespace {

struct Case {
    std::string name;
    LiftedModule lm;
    Section w;
    Dataset ds;
    LossKind loss;
};

double time_gradient(const ModuleObjective& obj, std::span<const double> theta, const std::vector<int>& batch,
                     int reps, double* loss) {
    std::vector<double> g(obj.dim());
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) *loss = obj.value_and_gradient(theta, batch, g);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

Case sine_case(int width, int samples) {
    auto bp = std::make_shared<const Blueprint>(load_blueprint(std::string(LIFTLAB_BLUEPRINT_DIR) + "/onedim_sin.blueprint.json"));
    std::vector<int> dims = resolve_lift_dims(*bp);
    for (int b = 0; b < bp->num_vertices(); ++b)
        if (bp->vertex(b).label == "hidden") dims[b] = width;
    SparseLiftConfig lc;
    lc.dims = dims;
    lc.seed = 1;
    SparseLift sl = sample_sparse_lift(bp, lc);
    return {"sine h=" + std::to_string(width), std::move(sl.module), std::move(sl.w), sine_dataset(samples, 2),
            LossKind::Squared};
}

Case mnist_like_case(int width, int samples) {
    auto bp = std::make_shared<const Blueprint>(load_blueprint(std::string(LIFTLAB_BLUEPRINT_DIR) + "/mnist.blueprint.json"));
    MnistModel m = mnist_sparse_model(bp, width, 10.0, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    Dataset ds;
    std::vector<double> x(784), y(10);
    for (int i = 0; i < samples; ++i) {
        for (double& v : x) v = u(rng);
        std::fill(y.begin(), y.end(), 0.0);
        y[i % 10] = 1.0;
        ds.push(x, y);
    }
    return {"mnist-shaped sparse h=" + std::to_string(width) + " lambda=10", std::move(m.lm), std::move(m.w),
            std::move(ds), LossKind::SoftmaxCrossEntropy};
}

}  // namespace

int main(int argc, char** argv) {
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    const int reps = quick ? 1 : 5;
    int team = 1;
#ifdef _OPENMP
    team = omp_get_max_threads();
#endif
    std::vector<Case> cases;
    cases.push_back(sine_case(quick ? 20 : 100, quick ? 500 : 10000));
    cases.push_back(mnist_like_case(quick ? 16 : 128, quick ? 50 : 1000));

    std::printf("%-36s %-22s %12s %10s %s\n", "case", "backend", "ms / pass", "speedup", "loss");
    int mismatches = 0;
    for (const Case& c : cases) {
        std::vector<int> batch(c.ds.size());
        for (int i = 0; i < c.ds.size(); ++i) batch[i] = i;
        const std::vector<double> theta(c.w.values.begin(), c.w.values.end());
        struct Path {
            const char* label;
            Backend backend;
            int threads;
        };
        const Path paths[] = {{"reference (serial)", Backend::Reference, 1},
                              {"compiled, 1 thread", Backend::Compiled, 1},
                              {"compiled, OpenMP", Backend::Compiled, 0}};
        double base = 0, ref_loss = 0;
        for (const Path& p : paths) {
            ModuleObjective obj(c.lm, c.ds, Head::Terminal, c.loss, p.backend, p.threads);
            double loss = 0;
            const double t = time_gradient(obj, theta, batch, reps, &loss);
            if (p.backend == Backend::Reference) {
                base = t;
                ref_loss = loss;
            } else if (std::abs(loss - ref_loss) > 1e-12 * std::max(1.0, std::abs(ref_loss))) {
                ++mismatches;
            }
            std::string label = p.label;
            if (p.threads == 0) label += " (" + std::to_string(team) + ")";
            std::printf("%-36s %-22s %12.3f %9.2fx %.12g\n", c.name.c_str(), label.c_str(), 1e3 * t, base / t, loss);
        }
    }
    if (mismatches) std::printf("%d backend(s) disagreed with the reference loss\n", mismatches);
    return mismatches ? 1 : 0;
}
