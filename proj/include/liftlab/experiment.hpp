#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "liftlab/blueprint.hpp"
#include "liftlab/theory.hpp"
#include "liftlab/train.hpp"

namespace liftlab {

// ---------------------------------------------------------------------------
// Witness networks given in configuration files
//
//   "witness": {
//     "blueprint": "witness_tanh.blueprint.json",
//     "dims": [1, 3, 1],
//     "edges": [{"edge": 0, "i": 0, "j": 0, "w": [-1.0]}, ...],
//     "readout": [1.0]
//   }
//
// Edge endpoints are class-local indices as in layered_lift; `readout` holds
// the coefficients of every terminal vertex, k rows each, one row when omitted.

struct WitnessSpec {
    std::shared_ptr<const Blueprint> bp;
    LiftedModule lm;
    Section w;
    Readout a;
};

WitnessSpec parse_witness(const nlohmann::json& j, const std::string& base_dir);

// ---------------------------------------------------------------------------
// Experiment configuration

enum class ExperimentKind { SineQuantiles, MnistCompare, WitnessCover, TheoryReport };

std::string kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::SineQuantiles;
    std::string blueprint;        // sine-quantiles, mnist-compare (sparse family)
    std::string dense_blueprint;  // mnist-compare dense family
    std::vector<int> widths;
    std::vector<double> lambdas;
    int seeds = 1;
    OptimizerConfig optimizer;
    std::string output = "results";
    std::uint64_t seed = 0;
    int threads = 0;
    bool plots = false;
    bool paper_scale = false;

    // sine-quantiles
    int samples = 10000;
    // mnist-compare
    std::string mnist_dir;
    int train_limit = -1;
    int test_limit = -1;
    // witness-cover and theory-report
    nlohmann::json witness;
    double eta = 1.0;
    int mc_samples = 100000;
    // theory-report
    double epsilon = 0;
    double delta = 0.1;
    nlohmann::json target;  // {"kind": "witness"} or {"kind": "sine", "amplitude", "omega", "phase"}
    int input_count = 50;
    double input_low = -1, input_high = 1;

    std::string base_dir;  // directory relative paths are resolved against
};

// Desk-scale defaults: 2e4 iterations and widths capped at 1024 unless
// `paper_scale` is set, which restores 1e5 iterations and the full width lists.
// Throws ConfigError (and ParseError for malformed JSON) with field context.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir, bool paper_scale = false);
ExperimentConfig load_experiment_config(const std::string& path, bool paper_scale = false);

std::string resolve_path(const std::string& base_dir, const std::string& path);

// ---------------------------------------------------------------------------
// Sine quantiles

// n inputs uniform on [0, 100] with targets 2 sin(0.5 x + 0.42).
Dataset sine_dataset(int n, std::uint64_t seed);

// Linear interpolation between order statistics at position q (n - 1).
double quantile(std::vector<double> values, double q);

struct QuantileRow {
    int width = 0;
    double p10 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0;
    std::vector<double> losses;  // per seed
};

QuantileRow quantile_row(int width, std::vector<double> losses);

// Final full-dataset training loss of one run on the one-dimensional blueprint
// with the hidden class at `width`.
double sine_trial(std::shared_ptr<const Blueprint> bp, const Dataset& ds, int width, std::uint64_t seed,
                  const OptimizerConfig& opt);

std::vector<QuantileRow> run_sine_quantiles(const ExperimentConfig& cfg);
void write_quantile_csv(std::ostream& os, const std::vector<QuantileRow>& rows);

// ---------------------------------------------------------------------------
// MNIST comparison

struct MnistRow {
    std::string family;  // "dense" or "sparse"
    int width = 0;
    double lambda = 0;   // 0 for the dense family
    long long parameters = 0;
    double accuracy = 0;
};

struct MnistModel {
    LiftedModule lm;
    Section w;
};

// Dense three-layer perceptron: fan-in normal initialization for the weight
// matrices, standard normal biases, logits W x + b.
MnistModel mnist_dense_model(std::shared_ptr<const Blueprint> dense_bp, int width, std::uint64_t seed);
// Random sparse lift with hidden widths `width` and input-edge degree lambda.
MnistModel mnist_sparse_model(std::shared_ptr<const Blueprint> sparse_bp, int width, double lambda, std::uint64_t seed);

// Argmax accuracy of the terminal outputs.
double classification_accuracy(const MnistModel& m, std::span<const double> theta, const Dataset& test);

MnistRow mnist_trial(const std::string& family, const MnistModel& m, double lambda, const Dataset& train,
                     const Dataset& test, const OptimizerConfig& opt, int threads);

std::vector<MnistRow> run_mnist_compare(const ExperimentConfig& cfg);
void write_mnist_csv(std::ostream& os, const std::vector<MnistRow>& rows);

// ---------------------------------------------------------------------------
// Witness covering frequencies

struct CoverRow {
    int width = 0;
    int trials = 0;
    int successes = 0;
    double frequency = 0;
    double bound = 0;  // covering probability lower bound
};

// Lift widths: input classes keep their names, every other class gets `width`.
std::vector<int> cover_dims(const Blueprint& bp, int width);

// One covering search with per witness vertex `alpha` on the sparse lift drawn
// with `seed`. Found morphisms are re-checked with verify_covering.
CoverSearch cover_trial(const WitnessSpec& wit, int width, double eta, std::span<const double> alpha,
                        std::uint64_t seed);

std::vector<CoverRow> run_witness_cover(const ExperimentConfig& cfg);
void write_cover_csv(std::ostream& os, const std::vector<CoverRow>& rows);

// ---------------------------------------------------------------------------
// Theory report

// Sample inputs and target values described by the configuration.
TheoryInputs theory_inputs(const ExperimentConfig& cfg, const WitnessSpec& wit);
TheoryReport run_theory_report(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Result emission

// Runs the configured experiment, writes CSV/JSON (and SVG with cfg.plots)
// into cfg.output, and returns the written paths. Empty result sets write
// nothing and add a warning.
struct EmitResult {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};
EmitResult run_experiment(const ExperimentConfig& cfg);

}  // namespace liftlab
