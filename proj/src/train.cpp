#include "liftlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include "liftlab/autodiff.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace liftlab {

void Dataset::push(std::span<const double> x, std::span<const double> y) {
    if (inputs.empty() && targets.empty()) {
        input_dim = static_cast<int>(x.size());
        k = static_cast<int>(y.size());
    }
    if (static_cast<int>(x.size()) != input_dim || static_cast<int>(y.size()) != k)
        throw ShapeMismatch("sample shape differs from the dataset's");
    inputs.insert(inputs.end(), x.begin(), x.end());
    targets.insert(targets.end(), y.begin(), y.end());
}

void check_dataset(const Dataset& ds) {
    if (ds.input_dim <= 0 || ds.inputs.empty()) throw EmptyDataset("dataset has no samples");
    if (ds.inputs.size() % ds.input_dim != 0) throw ShapeMismatch("input storage is not a whole number of rows");
    const size_t n = ds.inputs.size() / ds.input_dim;
    if (ds.targets.size() != n * static_cast<size_t>(ds.k))
        throw ShapeMismatch("dataset has " + std::to_string(n) + " inputs but " +
                            std::to_string(ds.k > 0 ? ds.targets.size() / ds.k : 0) + " targets");
    if (!ds.weights.empty() && ds.weights.size() != n) throw ShapeMismatch("dataset weights have the wrong length");
}

namespace {

int num_threads(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

int thread_id() {
#ifdef _OPENMP
    return omp_get_thread_num();
#else
    return 0;
#endif
}

constexpr int kWave = 64;

}  // namespace

ModuleObjective::ModuleObjective(const LiftedModule& lm, const Dataset& ds, Head head, LossKind loss, Backend backend,
                                 int threads, int chunk)
    : lm_(&lm), ds_(&ds), head_(head), loss_(loss), threads_(threads), chunk_(std::max(chunk, 1)) {
    check_dataset(ds);
    if (ds.input_dim != lm.input_bundle().total())
        throw ShapeMismatch("dataset rows have " + std::to_string(ds.input_dim) + " values, the module takes " +
                            std::to_string(lm.input_bundle().total()));
    nw_ = lm.weight_bundle().total();
    for (int v : lm.terminals()) {
        term_off_.push_back(nf_);
        term_dim_.push_back(lm.y_dim(v));
        term_scale_.push_back(1.0 / std::sqrt(static_cast<double>(lm.class_size(lm.pi(v)))));
        nf_ += lm.y_dim(v);
    }
    k_ = head == Head::Linear ? ds.k : nf_;
    if (head == Head::Terminal && ds.k != nf_)
        throw ShapeMismatch("targets have " + std::to_string(ds.k) + " values but the module has " +
                            std::to_string(nf_) + " terminal outputs");
    na_ = head == Head::Linear ? k_ * nf_ : 0;
    if (backend != Backend::Reference) {
        std::string why;
        if (BatchKernel::supports(lm, &why))
            kernel_ = std::make_unique<BatchKernel>(lm);
        else if (backend == Backend::Compiled)
            throw Unsupported(why);
    }
}

std::vector<double> ModuleObjective::pack(const Params& p) const {
    std::vector<double> theta(p.w.values.begin(), p.w.values.end());
    if (static_cast<int>(theta.size()) != nw_) throw ShapeMismatch("weights do not match the module");
    if (head_ == Head::Linear) {
        if (p.a.k != k_ || static_cast<int>(p.a.coeffs.values.size()) != na_)
            throw ShapeMismatch("readout does not match the dataset's output dimension");
        theta.insert(theta.end(), p.a.coeffs.values.begin(), p.a.coeffs.values.end());
    }
    return theta;
}

Params ModuleObjective::unpack(std::span<const double> theta) const {
    if (static_cast<int>(theta.size()) != dim()) throw ShapeMismatch("parameter vector has the wrong length");
    Params p{Section(lm_->weight_bundle()), zero_readout(*lm_, head_ == Head::Linear ? k_ : 0)};
    std::copy(theta.begin(), theta.begin() + nw_, p.w.values.begin());
    if (head_ == Head::Linear) std::copy(theta.begin() + nw_, theta.end(), p.a.coeffs.values.begin());
    return p;
}

double ModuleObjective::head_loss(std::span<const double> theta, const double* f, std::span<const double> y,
                                  double scale, double* ct_f, double* grad_a, double* pred_out) const {
    double pred_buf[64];
    std::vector<double> pred_vec;
    double* pred = pred_buf;
    if (k_ > 64) {
        pred_vec.resize(k_);
        pred = pred_vec.data();
    }
    const double* a = theta.data() + nw_;
    if (head_ == Head::Terminal) {
        std::copy(f, f + nf_, pred);
    } else {
        std::fill(pred, pred + k_, 0.0);
        for (size_t t = 0; t < term_off_.size(); ++t) {
            const int d = term_dim_[t];
            const double* at = a + static_cast<size_t>(k_) * term_off_[t];
            const double* ft = f + term_off_[t];
            for (int i = 0; i < k_; ++i) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += at[i * d + j] * ft[j];
                pred[i] += term_scale_[t] * s;
            }
        }
    }
    if (pred_out) std::copy(pred, pred + k_, pred_out);

    double loss = 0.0;
    double ct_buf[64];
    std::vector<double> ct_vec;
    double* ct = ct_buf;
    if (k_ > 64) {
        ct_vec.resize(k_);
        ct = ct_vec.data();
    }
    if (loss_ == LossKind::Squared) {
        for (int i = 0; i < k_; ++i) {
            const double r = pred[i] - y[i];
            loss += r * r;
            ct[i] = 2.0 * r * scale;
        }
    } else {
        const double m = *std::max_element(pred, pred + k_);
        double z = 0.0;
        for (int i = 0; i < k_; ++i) z += std::exp(pred[i] - m);
        const double lse = m + std::log(z);
        double ysum = 0.0;
        for (int i = 0; i < k_; ++i) {
            loss -= y[i] * (pred[i] - lse);
            ysum += y[i];
        }
        for (int i = 0; i < k_; ++i) ct[i] = (std::exp(pred[i] - lse) * ysum - y[i]) * scale;
    }
    if (!ct_f) return loss;
    if (head_ == Head::Terminal) {
        std::copy(ct, ct + k_, ct_f);
        return loss;
    }
    for (size_t t = 0; t < term_off_.size(); ++t) {
        const int d = term_dim_[t];
        const double* at = a + static_cast<size_t>(k_) * term_off_[t];
        double* gt = grad_a + static_cast<size_t>(k_) * term_off_[t];
        const double* ft = f + term_off_[t];
        double* cf = ct_f + term_off_[t];
        std::fill(cf, cf + d, 0.0);
        for (int i = 0; i < k_; ++i) {
            const double c = term_scale_[t] * ct[i];
            for (int j = 0; j < d; ++j) {
                cf[j] += c * at[i * d + j];
                gt[i * d + j] += c * ft[j];
            }
        }
    }
    return loss;
}

double ModuleObjective::chunk_reference(std::span<const double> theta, const Section& w, const Chunk& c) const {
    const LiftedModule& lm = *lm_;
    Section x(lm.input_bundle());
    std::vector<double> ct_f(nf_);
    Section ct_w(lm.weight_bundle());
    double loss = 0.0;
    for (int b = 0; b < c.nb; ++b) {
        const int i = c.idx[b];
        auto row = ds_->input(i);
        std::copy(row.begin(), row.end(), x.values.begin());
        ForwardTape tape = forward(lm, w, x);
        std::vector<double> f = terminal_outputs(lm, tape.act);
        const double scale = ds_->weight(i) * c.inv_weight;
        double* pred = c.preds ? c.preds + static_cast<size_t>(b) * k_ : nullptr;
        const double l = head_loss(theta, f.data(), ds_->target(i), scale, c.grad ? ct_f.data() : nullptr,
                                   c.grad ? c.grad + nw_ : nullptr, pred);
        loss += scale * l;
        if (!c.grad) continue;
        Section ct_act(lm.activation_bundle());
        auto terms = lm.terminals();
        for (size_t t = 0; t < terms.size(); ++t) {
            auto dst = ct_act.at(terms[t]);
            std::copy(ct_f.begin() + term_off_[t], ct_f.begin() + term_off_[t] + term_dim_[t], dst.begin());
        }
        std::fill(ct_w.values.begin(), ct_w.values.end(), 0.0);
        backward_activations(lm, w, tape, ct_act, ct_w);
        for (int e = 0; e < nw_; ++e) c.grad[e] += ct_w.values[e];
    }
    return loss;
}

double ModuleObjective::chunk_compiled(std::span<const double> theta, const Chunk& c, KernelWorkspace& ws) const {
    std::vector<const double*> rows(c.nb);
    for (int b = 0; b < c.nb; ++b) rows[b] = ds_->input(c.idx[b]).data();
    std::span<const double> w = theta.subspan(0, nw_);
    kernel_->forward(w, rows.data(), c.nb, ws);
    std::vector<double> f(nf_), ct_f(nf_), ct_term(c.grad ? static_cast<size_t>(nf_) * c.nb : 0);
    double loss = 0.0;
    for (int b = 0; b < c.nb; ++b) {
        const int i = c.idx[b];
        for (int t = 0; t < nf_; ++t) f[t] = kernel_->terminal(ws, t, b);
        const double scale = ds_->weight(i) * c.inv_weight;
        double* pred = c.preds ? c.preds + static_cast<size_t>(b) * k_ : nullptr;
        const double l = head_loss(theta, f.data(), ds_->target(i), scale, c.grad ? ct_f.data() : nullptr,
                                   c.grad ? c.grad + nw_ : nullptr, pred);
        loss += scale * l;
        if (c.grad)
            for (int t = 0; t < nf_; ++t) ct_term[static_cast<size_t>(t) * c.nb + b] = ct_f[t];
    }
    if (c.grad) kernel_->backward(w, ws, c.nb, ct_term.data(), std::span<double>(c.grad, nw_));
    return loss;
}

double ModuleObjective::run(std::span<const double> theta, std::span<const int> idx_in, std::span<double> grad,
                            double* preds) const {
    if (static_cast<int>(theta.size()) != dim()) throw ShapeMismatch("parameter vector has the wrong length");
    const bool want_grad = !grad.empty();
    if (want_grad && static_cast<int>(grad.size()) != dim()) throw ShapeMismatch("gradient buffer has the wrong length");
    std::vector<int> all;
    std::span<const int> idx = idx_in;
    if (idx.empty()) {
        all.resize(ds_->size());
        for (int i = 0; i < ds_->size(); ++i) all[i] = i;
        idx = all;
    }
    double total_weight = 0.0;
    for (int i : idx) {
        if (i < 0 || i >= ds_->size()) throw ShapeMismatch("batch index out of range");
        total_weight += ds_->weight(i);
    }
    if (!(total_weight > 0)) throw EmptyDataset("batch has no weight");
    const double inv = 1.0 / total_weight;

    Section w(lm_->weight_bundle());
    if (!kernel_) std::copy(theta.begin(), theta.begin() + nw_, w.values.begin());

    const int n = static_cast<int>(idx.size());
    const int chunks = (n + chunk_ - 1) / chunk_;
    const int nt = num_threads(threads_);
    std::vector<KernelWorkspace> wss(nt);
    std::vector<double> partial_loss(kWave);
    std::vector<double> partial_grad(want_grad ? static_cast<size_t>(std::min(chunks, kWave)) * dim() : 0);
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (int w0 = 0; w0 < chunks; w0 += kWave) {
        const int wn = std::min(kWave, chunks - w0);
        std::fill(partial_grad.begin(), partial_grad.end(), 0.0);
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int q = 0; q < wn; ++q) {
            const int b0 = (w0 + q) * chunk_;
            Chunk c{idx.data() + b0, std::min(chunk_, n - b0), inv,
                    want_grad ? partial_grad.data() + static_cast<size_t>(q) * dim() : nullptr,
                    preds ? preds + static_cast<size_t>(b0) * k_ : nullptr};
            partial_loss[q] = kernel_ ? chunk_compiled(theta, c, wss[thread_id()]) : chunk_reference(theta, w, c);
        }
        for (int q = 0; q < wn; ++q) {
            loss += partial_loss[q];
            if (want_grad) {
                const double* pg = partial_grad.data() + static_cast<size_t>(q) * dim();
                for (int j = 0; j < dim(); ++j) grad[j] += pg[j];
            }
        }
    }
    return loss;
}

double ModuleObjective::value(std::span<const double> theta) const { return run(theta, {}, {}, nullptr); }

double ModuleObjective::value_and_gradient(std::span<const double> theta, std::span<const int> batch,
                                           std::span<double> grad) const {
    return run(theta, batch, grad, nullptr);
}

std::vector<double> ModuleObjective::predict(std::span<const double> theta) const {
    std::vector<double> out(static_cast<size_t>(ds_->size()) * k_);
    run(theta, {}, {}, out.data());
    return out;
}

double empirical_loss(const LiftedModule& lm, const Params& p, const Dataset& ds, Head head, LossKind loss) {
    ModuleObjective obj(lm, ds, head, loss, Backend::Reference);
    return obj.value(obj.pack(p));
}

Params loss_gradient(const LiftedModule& lm, const Params& p, const Dataset& ds, std::span<const int> batch,
                     Head head, LossKind loss) {
    ModuleObjective obj(lm, ds, head, loss, Backend::Reference);
    std::vector<double> grad(obj.dim());
    obj.value_and_gradient(obj.pack(p), batch, grad);
    return obj.unpack(grad);
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

void record(Trajectory& tr, double t, double loss, std::span<const double> theta, std::span<const double> theta0) {
    tr.times.push_back(t);
    tr.losses.push_back(loss);
    tr.dist.push_back(distance(theta, theta0));
    tr.theta.assign(theta.begin(), theta.end());
    if (!std::isfinite(loss))
        throw NonFiniteLoss("loss became non-finite at time " + std::to_string(t), tr);
}

}  // namespace

Trajectory run_gradient_flow(const Objective& obj, std::span<const double> theta0, double step, double horizon,
                             int record_every) {
    if (!(step > 0)) throw ConfigError("gradient flow step must be positive");
    if (horizon < 0) throw ConfigError("gradient flow horizon must be nonnegative");
    record_every = std::max(record_every, 1);
    const long long steps = std::llround(horizon / step);
    std::vector<double> theta(theta0.begin(), theta0.end()), grad(theta.size());
    Trajectory tr;
    for (long long k = 0;; ++k) {
        const double loss = obj.value_and_gradient(theta, {}, grad);
        if (k % record_every == 0 || k == steps) record(tr, static_cast<double>(k) * step, loss, theta, theta0);
        if (k == steps) break;
        for (size_t j = 0; j < theta.size(); ++j) theta[j] -= step * grad[j];
    }
    return tr;
}

double monotone_step(const Objective& obj, std::span<const double> theta0, double step, double horizon, double slack,
                     int max_halvings) {
    for (int h = 0; h <= max_halvings; ++h, step *= 0.5) {
        Trajectory tr;
        try {
            tr = run_gradient_flow(obj, theta0, step, horizon);
        } catch (const NonFiniteLoss&) {
            continue;
        }
        bool ok = true;
        for (int i = 1; i < tr.size() && ok; ++i) ok = tr.losses[i] <= tr.losses[i - 1] + slack;
        if (ok) return step;
    }
    return 0.0;
}

Trajectory run_optimizer(const Objective& obj, std::span<const double> theta0, const OptimizerConfig& cfg) {
    if (!(cfg.step > 0)) throw ConfigError("optimizer step must be positive");
    if (cfg.batch < 1 || cfg.batch > obj.num_samples())
        throw ConfigError("batch size " + std::to_string(cfg.batch) + " must lie in [1, " +
                          std::to_string(obj.num_samples()) + "]");
    const long long every = std::max<long long>(cfg.record_every, 1);
    std::vector<double> theta(theta0.begin(), theta0.end()), grad(theta.size()), m1(theta.size()), m2(theta.size());
    std::vector<int> batch(cfg.batch);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> pick(0, obj.num_samples() - 1);
    Trajectory tr;
    tr.method = cfg.kind == OptimizerKind::Adam ? "adam" : "sgd";
    double p1 = 1.0, p2 = 1.0;
    for (long long k = 0;; ++k) {
        if (k % every == 0 || k == cfg.iters) record(tr, static_cast<double>(k) * cfg.step, obj.value(theta), theta, theta0);
        if (k == cfg.iters) break;
        for (int& b : batch) b = pick(rng);
        const double l = obj.value_and_gradient(theta, batch, grad);
        if (!std::isfinite(l)) {
            record(tr, static_cast<double>(k) * cfg.step, l, theta, theta0);
            throw NonFiniteLoss("batch loss became non-finite at iteration " + std::to_string(k), tr);
        }
        if (cfg.kind == OptimizerKind::Sgd) {
            for (size_t j = 0; j < theta.size(); ++j) theta[j] -= cfg.step * grad[j];
            continue;
        }
        p1 *= cfg.beta1;
        p2 *= cfg.beta2;
        for (size_t j = 0; j < theta.size(); ++j) {
            m1[j] = cfg.beta1 * m1[j] + (1 - cfg.beta1) * grad[j];
            m2[j] = cfg.beta2 * m2[j] + (1 - cfg.beta2) * grad[j] * grad[j];
            const double mh = m1[j] / (1 - p1), vh = m2[j] / (1 - p2);
            theta[j] -= cfg.step * mh / (std::sqrt(vh) + cfg.eps);
        }
    }
    return tr;
}

double criterion_bound(double t, double eps, double kappa, double l0) {
    if (std::isinf(kappa)) return eps;
    if (l0 <= 0) return eps;
    const double inv_c = 1.0 / (l0 * l0 * l0);
    return eps + 1.0 / std::cbrt(kappa * t + inv_c);
}

Certificate check_convergence_criterion(const Trajectory& tr, double eps, double kappa) {
    if (tr.times.empty()) throw ConfigError("trajectory is empty");
    Certificate c;
    c.heuristic = tr.method != "gradient_flow";
    const double l0 = tr.losses.front();
    c.worst_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < tr.size(); ++i) {
        const double margin = criterion_bound(tr.times[i], eps, kappa, l0) - tr.losses[i];
        if (margin < c.worst_margin) {
            c.worst_margin = margin;
            c.worst_index = i;
        }
        if (margin < 0 && c.first_violation < 0) {
            c.first_violation = i;
            c.first_violation_time = tr.times[i];
            c.first_violation_margin = margin;
        }
    }
    c.pass = c.first_violation < 0;
    return c;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "time,loss,dist_from_init\n" << std::setprecision(17);
    for (int i = 0; i < tr.size(); ++i) os << tr.times[i] << ',' << tr.losses[i] << ',' << tr.dist[i] << '\n';
}

}  // namespace liftlab
