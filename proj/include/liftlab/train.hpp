#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "liftlab/errors.hpp"
#include "liftlab/evaluate.hpp"
#include "liftlab/kernels.hpp"
#include "liftlab/lifted_module.hpp"

namespace liftlab {

// Samples stored row-major. Each input row is laid out like the input bundle
// of the module it is fed to (one block per input name).
struct Dataset {
    int input_dim = 0;
    int k = 0;
    std::vector<double> inputs;
    std::vector<double> targets;
    std::vector<double> weights;  // empty means uniform

    int size() const { return input_dim > 0 ? static_cast<int>(inputs.size() / input_dim) : 0; }
    std::span<const double> input(int i) const { return {inputs.data() + static_cast<size_t>(i) * input_dim, size_t(input_dim)}; }
    std::span<const double> target(int i) const { return {targets.data() + static_cast<size_t>(i) * k, size_t(k)}; }
    double weight(int i) const { return weights.empty() ? 1.0 : weights[i]; }
    void push(std::span<const double> x, std::span<const double> y);
};

// Throws EmptyDataset or ShapeMismatch.
void check_dataset(const Dataset& ds);

// Linear: prediction = linear readout of the terminal activations.
// Terminal: prediction = terminal activations themselves (no readout weights).
enum class Head { Linear, Terminal };
enum class LossKind { Squared, SoftmaxCrossEntropy };
enum class Backend { Auto, Reference, Compiled };

// A differentiable loss over a flat parameter vector.
class Objective {
public:
    virtual ~Objective() = default;
    virtual int dim() const = 0;
    virtual int num_samples() const = 0;
    // Loss over the whole dataset.
    virtual double value(std::span<const double> theta) const = 0;
    // Loss over the batch (sample indices, repeats allowed; empty means all)
    // with its gradient written to grad.
    virtual double value_and_gradient(std::span<const double> theta, std::span<const int> batch,
                                      std::span<double> grad) const = 0;
};

// Flat parameters are the lifted edge weights followed, for the linear head,
// by the readout coefficients.
class ModuleObjective final : public Objective {
public:
    ModuleObjective(const LiftedModule& lm, const Dataset& ds, Head head = Head::Linear,
                    LossKind loss = LossKind::Squared, Backend backend = Backend::Auto, int threads = 0,
                    int chunk = 32);

    int dim() const override { return nw_ + na_; }
    int num_samples() const override { return ds_->size(); }
    double value(std::span<const double> theta) const override;
    double value_and_gradient(std::span<const double> theta, std::span<const int> batch,
                              std::span<double> grad) const override;

    std::vector<double> pack(const Params& p) const;
    Params unpack(std::span<const double> theta) const;
    int output_dim() const { return k_; }
    bool compiled() const { return kernel_ != nullptr; }

    // Predictions for every sample, row-major (size * output_dim).
    std::vector<double> predict(std::span<const double> theta) const;

private:
    struct Chunk {
        const int* idx;
        int nb;
        double inv_weight;
        double* grad;   // null when no gradient is wanted
        double* preds;  // null when predictions are not wanted
    };
    double run(std::span<const double> theta, std::span<const int> idx, std::span<double> grad,
               double* preds) const;
    double chunk_reference(std::span<const double> theta, const Section& w, const Chunk& c) const;
    double chunk_compiled(std::span<const double> theta, const Chunk& c, KernelWorkspace& ws) const;
    // Loss of one sample from its terminal activations f, scaled by `scale`.
    // When ct_f is given, writes d(loss)/df there and adds d(loss)/da to grad_a.
    double head_loss(std::span<const double> theta, const double* f, std::span<const double> y, double scale,
                     double* ct_f, double* grad_a, double* pred) const;

    const LiftedModule* lm_;
    const Dataset* ds_;
    Head head_;
    LossKind loss_;
    int threads_, chunk_;
    int nw_ = 0, na_ = 0, k_ = 0, nf_ = 0;
    std::vector<int> term_off_, term_dim_;
    std::vector<double> term_scale_;
    std::unique_ptr<BatchKernel> kernel_;
};

// Mean per-sample loss (weighted mean when the dataset carries weights).
double empirical_loss(const LiftedModule& lm, const Params& p, const Dataset& ds, Head head = Head::Linear,
                      LossKind loss = LossKind::Squared);

// Gradient of the mean loss over the given batch (empty means all samples).
Params loss_gradient(const LiftedModule& lm, const Params& p, const Dataset& ds, std::span<const int> batch = {},
                     Head head = Head::Linear, LossKind loss = LossKind::Squared);

struct Trajectory {
    std::string method = "gradient_flow";
    std::vector<double> times;
    std::vector<double> losses;
    std::vector<double> dist;  // Euclidean distance of the parameters from their initial value
    std::vector<double> theta;  // parameters at the last recorded point

    int size() const { return static_cast<int>(times.size()); }
};

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(const std::string& what, Trajectory partial) : Error(what), partial(std::move(partial)) {}
    Trajectory partial;
};

// Explicit Euler steps of size `step` on the full-batch gradient up to time
// `horizon`; records every `record_every` steps and at the end.
Trajectory run_gradient_flow(const Objective& obj, std::span<const double> theta0, double step, double horizon,
                             int record_every = 1);

// Halves the step until every recorded loss of a gradient-flow run is no larger
// than its predecessor plus `slack`. Returns the accepted step, or 0 when
// `max_halvings` halvings do not suffice.
double monotone_step(const Objective& obj, std::span<const double> theta0, double step, double horizon,
                     double slack = 1e-9, int max_halvings = 20);

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double step = 1e-3;
    int batch = 1;
    long long iters = 0;
    std::uint64_t seed = 0;
    long long record_every = 1;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

// Mini-batches are drawn uniformly with replacement. Recorded losses are full
// dataset losses at iterations 0, record_every, ... and at the last iteration;
// times are iteration * step.
Trajectory run_optimizer(const Objective& obj, std::span<const double> theta0, const OptimizerConfig& cfg);

struct Certificate {
    bool pass = true;
    bool heuristic = false;  // trajectory was not produced by gradient flow
    double worst_margin = 0;  // min over records of bound - loss
    int worst_index = 0;
    int first_violation = -1;
    double first_violation_time = 0;
    double first_violation_margin = 0;
};

// eps + (kappa t + 1 / L0^3)^(-1/3); an infinite kappa gives eps.
double criterion_bound(double t, double eps, double kappa, double l0);

Certificate check_convergence_criterion(const Trajectory& tr, double eps, double kappa);

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

}  // namespace liftlab
