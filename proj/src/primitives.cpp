#include "liftlab/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "liftlab/errors.hpp"

namespace liftlab {

namespace {

double norm2(Vec v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(Vec a, Vec b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::string dims_str(int w, int y, int z) {
    return "got W=" + std::to_string(w) + ", Y=" + std::to_string(y) + ", Z=" + std::to_string(z);
}

int exact_sqrt(int n) {
    int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : -1;
}

// ---------------------------------------------------------------- edge ops

// (w, y) -> w y with a scalar weight. "mul" additionally requires scalar y.
class ScaleOp final : public EdgeOp {
public:
    ScaleOp(std::string name, bool scalar_only) : name_(std::move(name)), scalar_only_(scalar_only) {}
    std::string name() const override { return name_; }
    std::string check_signature(int w, int y, int z) const override {
        if (w != 1 || z != y || (scalar_only_ && y != 1))
            return scalar_only_ ? "expects W=1, Y=1, Z=1; " + dims_str(w, y, z)
                                : "expects W=1, Z=Y; " + dims_str(w, y, z);
        return {};
    }
    void eval(Vec w, Vec y, MutVec z) const override {
        for (size_t i = 0; i < y.size(); ++i) z[i] = w[0] * y[i];
    }
    void vjp(Vec w, Vec y, Vec ct_z, MutVec ct_w, MutVec ct_y) const override {
        ct_w[0] += dot(ct_z, y);
        for (size_t i = 0; i < y.size(); ++i) ct_y[i] += w[0] * ct_z[i];
    }
    void jvp(Vec w, Vec y, Vec dw, Vec dy, MutVec dz) const override {
        for (size_t i = 0; i < y.size(); ++i) dz[i] = dw[0] * y[i] + w[0] * dy[i];
    }
    double deviation_bound(Vec w, Vec y, double eta, double r) const override {
        return std::abs(w[0]) * r + norm2(y) * eta + eta * r;
    }

private:
    std::string name_;
    bool scalar_only_;
};

// (w, y) -> (w0 y, w1 y).
class PairScaleOp final : public EdgeOp {
public:
    std::string name() const override { return "pair_scale"; }
    std::string check_signature(int w, int y, int z) const override {
        if (w != 2 || z != 2 * y) return "expects W=2, Z=2Y; " + dims_str(w, y, z);
        return {};
    }
    void eval(Vec w, Vec y, MutVec z) const override {
        const size_t n = y.size();
        for (size_t i = 0; i < n; ++i) {
            z[i] = w[0] * y[i];
            z[n + i] = w[1] * y[i];
        }
    }
    void vjp(Vec w, Vec y, Vec ct_z, MutVec ct_w, MutVec ct_y) const override {
        const size_t n = y.size();
        ct_w[0] += dot(ct_z.first(n), y);
        ct_w[1] += dot(ct_z.subspan(n), y);
        for (size_t i = 0; i < n; ++i) ct_y[i] += w[0] * ct_z[i] + w[1] * ct_z[n + i];
    }
    void jvp(Vec w, Vec y, Vec dw, Vec dy, MutVec dz) const override {
        const size_t n = y.size();
        for (size_t i = 0; i < n; ++i) {
            dz[i] = dw[0] * y[i] + w[0] * dy[i];
            dz[n + i] = dw[1] * y[i] + w[1] * dy[i];
        }
    }
    double deviation_bound(Vec w, Vec y, double eta, double r) const override {
        return norm2(w) * r + norm2(y) * eta + eta * r;
    }
};

class CopyOp final : public EdgeOp {
public:
    std::string name() const override { return "copy"; }
    std::string check_signature(int w, int y, int z) const override {
        if (w != 0 || z != y) return "expects W=0, Z=Y; " + dims_str(w, y, z);
        return {};
    }
    void eval(Vec, Vec y, MutVec z) const override { std::copy(y.begin(), y.end(), z.begin()); }
    void vjp(Vec, Vec, Vec ct_z, MutVec, MutVec ct_y) const override {
        for (size_t i = 0; i < ct_z.size(); ++i) ct_y[i] += ct_z[i];
    }
    void jvp(Vec, Vec, Vec, Vec dy, MutVec dz) const override { std::copy(dy.begin(), dy.end(), dz.begin()); }
    double deviation_bound(Vec, Vec, double, double r) const override { return r; }
};

// (w, x) -> (w x, 1); the second coordinate counts contributions once summed.
class PairMulOp final : public EdgeOp {
public:
    std::string name() const override { return "pair_mul"; }
    std::string check_signature(int w, int y, int z) const override {
        if (w != 1 || y != 1 || z != 2) return "expects W=1, Y=1, Z=2; " + dims_str(w, y, z);
        return {};
    }
    void eval(Vec w, Vec y, MutVec z) const override {
        z[0] = w[0] * y[0];
        z[1] = 1.0;
    }
    void vjp(Vec w, Vec y, Vec ct_z, MutVec ct_w, MutVec ct_y) const override {
        ct_w[0] += ct_z[0] * y[0];
        ct_y[0] += w[0] * ct_z[0];
    }
    void jvp(Vec w, Vec y, Vec dw, Vec dy, MutVec dz) const override {
        dz[0] = dw[0] * y[0] + w[0] * dy[0];
        dz[1] = 0.0;
    }
    // Only the first coordinate can move.
    double deviation_bound(Vec w, Vec y, double eta, double r) const override {
        return std::abs(w[0]) * r + std::abs(y[0]) * eta + eta * r;
    }
};

// Valid (no padding) 2-D cross-correlation of a square k x k kernel with an
// H x W map, both row-major.
class Conv2dOp final : public EdgeOp {
public:
    explicit Conv2dOp(const nlohmann::json& p)
        : height_(p.value("height", -1)), width_(p.value("width", -1)) {}
    std::string name() const override { return "conv2d_nopad"; }

    struct Geometry {
        int h, w, k;
        int oh() const { return h - k + 1; }
        int ow() const { return w - k + 1; }
    };

    bool geometry(int w_dim, int y_dim, Geometry& g) const {
        g.k = exact_sqrt(w_dim);
        if (height_ > 0 && width_ > 0) {
            g.h = height_;
            g.w = width_;
        } else {
            g.h = g.w = exact_sqrt(y_dim);
        }
        return g.k > 0 && g.h > 0 && g.h * g.w == y_dim && g.h >= g.k && g.w >= g.k;
    }

    std::string check_signature(int w, int y, int z) const override {
        Geometry g{};
        if (!geometry(w, y, g) || z != g.oh() * g.ow())
            return "expects a square kernel W=k*k, Y=H*W and Z=(H-k+1)(W-k+1); " + dims_str(w, y, z);
        return {};
    }
    void eval(Vec w, Vec y, MutVec z) const override {
        Geometry g{};
        geometry(static_cast<int>(w.size()), static_cast<int>(y.size()), g);
        for (int i = 0; i < g.oh(); ++i)
            for (int j = 0; j < g.ow(); ++j) {
                double s = 0;
                for (int p = 0; p < g.k; ++p)
                    for (int q = 0; q < g.k; ++q) s += w[p * g.k + q] * y[(i + p) * g.w + (j + q)];
                z[i * g.ow() + j] = s;
            }
    }
    void vjp(Vec w, Vec y, Vec ct_z, MutVec ct_w, MutVec ct_y) const override {
        Geometry g{};
        geometry(static_cast<int>(w.size()), static_cast<int>(y.size()), g);
        for (int i = 0; i < g.oh(); ++i)
            for (int j = 0; j < g.ow(); ++j) {
                const double c = ct_z[i * g.ow() + j];
                for (int p = 0; p < g.k; ++p)
                    for (int q = 0; q < g.k; ++q) {
                        ct_w[p * g.k + q] += c * y[(i + p) * g.w + (j + q)];
                        ct_y[(i + p) * g.w + (j + q)] += c * w[p * g.k + q];
                    }
            }
    }
    void jvp(Vec w, Vec y, Vec dw, Vec dy, MutVec dz) const override {
        Geometry g{};
        geometry(static_cast<int>(w.size()), static_cast<int>(y.size()), g);
        for (int i = 0; i < g.oh(); ++i)
            for (int j = 0; j < g.ow(); ++j) {
                double s = 0;
                for (int p = 0; p < g.k; ++p)
                    for (int q = 0; q < g.k; ++q) {
                        const int yi = (i + p) * g.w + (j + q);
                        s += dw[p * g.k + q] * y[yi] + w[p * g.k + q] * dy[yi];
                    }
                dz[i * g.ow() + j] = s;
            }
    }
    // Young's inequality |K * y|_2 <= |K|_1 |y|_2 and |K|_1 <= k |K|_2.
    double deviation_bound(Vec w, Vec y, double eta, double r) const override {
        double l1 = 0;
        for (double x : w) l1 += std::abs(x);
        const double k = std::sqrt(static_cast<double>(w.size()));
        return l1 * r + k * eta * norm2(y) + k * eta * r;
    }

private:
    int height_, width_;
};

// -------------------------------------------------------------- vertex ops

enum class Act { Identity, Relu, Tanh, Sin };

double act_f(Act a, double s) {
    switch (a) {
        case Act::Identity: return s;
        case Act::Relu: return s > 0 ? s : 0.0;
        case Act::Tanh: return std::tanh(s);
        case Act::Sin: return std::sin(s);
    }
    return s;
}

// ReLU uses the subgradient 0 at the origin.
double act_df(Act a, double s) {
    switch (a) {
        case Act::Identity: return 1.0;
        case Act::Relu: return s > 0 ? 1.0 : 0.0;
        case Act::Tanh: {
            double t = std::tanh(s);
            return 1.0 - t * t;
        }
        case Act::Sin: return std::cos(s);
    }
    return 1.0;
}

// y = f(sum over classes of z_a), elementwise.
class SumActOp final : public VertexOp {
public:
    SumActOp(std::string name, Act a) : name_(std::move(name)), act_(a) {}
    std::string name() const override { return name_; }
    std::string check_signature(std::span<const int> cd, int y) const override {
        for (int d : cd)
            if (d != y)
                return "every parent class must have Z equal to Y=" + std::to_string(y) +
                       ", got " + std::to_string(d);
        return {};
    }
    void eval(ClassArgs z, MutVec y) const override {
        for (size_t i = 0; i < y.size(); ++i) {
            double s = 0;
            for (const Vec& za : z) s += za[i];
            y[i] = act_f(act_, s);
        }
    }
    void vjp(ClassArgs z, Vec ct_y, MutClassArgs ct_z) const override {
        for (size_t i = 0; i < ct_y.size(); ++i) {
            double s = 0;
            for (const Vec& za : z) s += za[i];
            const double g = ct_y[i] * act_df(act_, s);
            for (const MutVec& c : ct_z) c[i] = g;
        }
    }
    void jvp(ClassArgs z, ClassArgs dz, MutVec dy) const override {
        for (size_t i = 0; i < dy.size(); ++i) {
            double s = 0, ds = 0;
            for (size_t a = 0; a < z.size(); ++a) {
                s += z[a][i];
                ds += dz[a][i];
            }
            dy[i] = act_df(act_, s) * ds;
        }
    }
    // All four activations are 1-Lipschitz.
    double deviation_bound(ClassArgs, std::span<const double> radii) const override {
        double r = 0;
        for (double x : radii) r += x;
        return r;
    }
    bool smooth() const override { return act_ != Act::Relu; }

private:
    std::string name_;
    Act act_;
};

// No arguments; every coordinate is 1.
class OneOp final : public VertexOp {
public:
    std::string name() const override { return "one"; }
    std::string check_signature(std::span<const int> cd, int) const override {
        if (!cd.empty()) return "takes no parent classes, got " + std::to_string(cd.size());
        return {};
    }
    void eval(ClassArgs, MutVec y) const override { std::fill(y.begin(), y.end(), 1.0); }
    void vjp(ClassArgs, Vec, MutClassArgs) const override {}
    void jvp(ClassArgs, ClassArgs, MutVec dy) const override { std::fill(dy.begin(), dy.end(), 0.0); }
    double deviation_bound(ClassArgs, std::span<const double>) const override { return 0.0; }
};

// ((x, n), b...) -> x / sqrt(n) + sum b, with x / sqrt(0) read as 0.
// Exactly one class is the (x, n) pair; the others are scalar biases.
class SqrtBiasReadoutOp final : public VertexOp {
public:
    std::string name() const override { return "sqrt_bias_readout"; }
    std::string check_signature(std::span<const int> cd, int y) const override {
        int pairs = 0;
        for (int d : cd) {
            if (d == 2) ++pairs;
            else if (d != 1) return "parent classes must have Z=2 (pair) or Z=1 (bias)";
        }
        if (y != 1 || pairs != 1) return "expects Y=1 and exactly one pair class with Z=2";
        return {};
    }
    static size_t pair_index(ClassArgs z) {
        for (size_t a = 0; a < z.size(); ++a)
            if (z[a].size() == 2) return a;
        return 0;
    }
    void eval(ClassArgs z, MutVec y) const override {
        const size_t p = pair_index(z);
        double out = z[p][1] > 0 ? z[p][0] / std::sqrt(z[p][1]) : 0.0;
        for (size_t a = 0; a < z.size(); ++a)
            if (a != p) out += z[a][0];
        y[0] = out;
    }
    void vjp(ClassArgs z, Vec ct_y, MutClassArgs ct_z) const override {
        const size_t p = pair_index(z);
        const double n = z[p][1];
        for (size_t a = 0; a < z.size(); ++a) {
            if (a == p) {
                ct_z[a][0] = n > 0 ? ct_y[0] / std::sqrt(n) : 0.0;
                ct_z[a][1] = n > 0 ? -0.5 * z[p][0] * ct_y[0] / (n * std::sqrt(n)) : 0.0;
            } else {
                ct_z[a][0] = ct_y[0];
            }
        }
    }
    void jvp(ClassArgs z, ClassArgs dz, MutVec dy) const override {
        const size_t p = pair_index(z);
        const double n = z[p][1];
        double out = n > 0 ? dz[p][0] / std::sqrt(n) - 0.5 * z[p][0] * dz[p][1] / (n * std::sqrt(n)) : 0.0;
        for (size_t a = 0; a < z.size(); ++a)
            if (a != p) out += dz[a][0];
        dy[0] = out;
    }
    // The count coordinate is produced by pair_mul and never moves, so only
    // the first coordinate of the pair contributes.
    double deviation_bound(ClassArgs z, std::span<const double> radii) const override {
        const size_t p = pair_index(z);
        double r = 0;
        for (size_t a = 0; a < z.size(); ++a)
            r += a == p ? (z[p][1] > 0 ? radii[a] / std::sqrt(z[p][1]) : 0.0) : radii[a];
        return r;
    }
};

// (a, b) -> a b^T, row-major n x n.
class OuterOp final : public VertexOp {
public:
    std::string name() const override { return "outer"; }
    std::string check_signature(std::span<const int> cd, int y) const override {
        if (cd.size() != 1 || cd[0] % 2 != 0 || (cd[0] / 2) * (cd[0] / 2) != y)
            return "expects a single pair class Z=2n and Y=n*n";
        return {};
    }
    void eval(ClassArgs z, MutVec y) const override {
        const size_t n = z[0].size() / 2;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) y[i * n + j] = z[0][i] * z[0][n + j];
    }
    void vjp(ClassArgs z, Vec ct_y, MutClassArgs ct_z) const override {
        const size_t n = z[0].size() / 2;
        for (size_t i = 0; i < n; ++i) {
            double s = 0;
            for (size_t j = 0; j < n; ++j) s += ct_y[i * n + j] * z[0][n + j];
            ct_z[0][i] = s;
        }
        for (size_t j = 0; j < n; ++j) {
            double s = 0;
            for (size_t i = 0; i < n; ++i) s += ct_y[i * n + j] * z[0][i];
            ct_z[0][n + j] = s;
        }
    }
    void jvp(ClassArgs z, ClassArgs dz, MutVec dy) const override {
        const size_t n = z[0].size() / 2;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                dy[i * n + j] = dz[0][i] * z[0][n + j] + z[0][i] * dz[0][n + j];
    }
    double deviation_bound(ClassArgs z, std::span<const double> radii) const override {
        const double r = radii[0];
        return r * norm2(z[0]) + 0.5 * r * r;
    }
};

// ((x, y), A) -> x + softmax_rows(A) y.
class AddSoftMulOp final : public VertexOp {
public:
    explicit AddSoftMulOp(const nlohmann::json& p) : pair_class_(p.value("pair_class", -1)) {}
    std::string name() const override { return "add_soft_mul"; }
    std::string check_signature(std::span<const int> cd, int y) const override {
        if (cd.size() != 2) return "expects two parent classes, a pair Z=2n and a matrix Z=n*n";
        const int p = pair_index(cd, y);
        if (cd[p] != 2 * y || cd[1 - p] != y * y)
            return "expects a pair class Z=2n and a matrix class Z=n*n with Y=n";
        return {};
    }
    int pair_index(std::span<const int> cd, int y) const {
        if (pair_class_ >= 0) return pair_class_;
        if (cd[0] == 2 * y) return 0;
        return 1;
    }
    int pair_index(ClassArgs z) const {
        std::vector<int> cd{static_cast<int>(z[0].size()), static_cast<int>(z[1].size())};
        // y = n where the pair has length 2n; n*n + 2n = total.
        const int total = cd[0] + cd[1];
        int n = static_cast<int>(std::lround(std::sqrt(1.0 + total) - 1.0));
        return pair_index(cd, n);
    }
    static void softmax_rows(Vec a, size_t n, std::vector<double>& s) {
        s.assign(n * n, 0.0);
        for (size_t i = 0; i < n; ++i) {
            double m = a[i * n];
            for (size_t j = 1; j < n; ++j) m = std::max(m, a[i * n + j]);
            double tot = 0;
            for (size_t j = 0; j < n; ++j) tot += (s[i * n + j] = std::exp(a[i * n + j] - m));
            for (size_t j = 0; j < n; ++j) s[i * n + j] /= tot;
        }
    }
    void eval(ClassArgs z, MutVec out) const override {
        const int p = pair_index(z);
        const size_t n = out.size();
        Vec xy = z[p], a = z[1 - p];
        std::vector<double> s;
        softmax_rows(a, n, s);
        for (size_t i = 0; i < n; ++i) {
            double acc = xy[i];
            for (size_t j = 0; j < n; ++j) acc += s[i * n + j] * xy[n + j];
            out[i] = acc;
        }
    }
    void vjp(ClassArgs z, Vec ct, MutClassArgs ct_z) const override {
        const int p = pair_index(z);
        const size_t n = ct.size();
        Vec xy = z[p], a = z[1 - p];
        MutVec c_xy = ct_z[p], c_a = ct_z[1 - p];
        std::vector<double> s;
        softmax_rows(a, n, s);
        for (size_t i = 0; i < n; ++i) c_xy[i] = ct[i];
        for (size_t j = 0; j < n; ++j) {
            double acc = 0;
            for (size_t i = 0; i < n; ++i) acc += s[i * n + j] * ct[i];
            c_xy[n + j] = acc;
        }
        for (size_t i = 0; i < n; ++i) {
            // dS_ij = ct_i y_j; dA_i = S_i * (dS_i - <dS_i, S_i>).
            double inner = 0;
            for (size_t j = 0; j < n; ++j) inner += s[i * n + j] * ct[i] * xy[n + j];
            for (size_t j = 0; j < n; ++j) c_a[i * n + j] = s[i * n + j] * (ct[i] * xy[n + j] - inner);
        }
    }
    void jvp(ClassArgs z, ClassArgs dz, MutVec dy) const override {
        const int p = pair_index(z);
        const size_t n = dy.size();
        Vec xy = z[p], dxy = dz[p], da = dz[1 - p];
        std::vector<double> s;
        softmax_rows(z[1 - p], n, s);
        for (size_t i = 0; i < n; ++i) {
            double inner = 0;
            for (size_t j = 0; j < n; ++j) inner += s[i * n + j] * da[i * n + j];
            double acc = dxy[i];
            for (size_t j = 0; j < n; ++j) {
                const double ds = s[i * n + j] * (da[i * n + j] - inner);
                acc += s[i * n + j] * dxy[n + j] + ds * xy[n + j];
            }
            dy[i] = acc;
        }
    }
    // Row softmax is 1/2-Lipschitz, so |dS|_F <= r_A / 2.
    double deviation_bound(ClassArgs z, std::span<const double> radii) const override {
        const int p = pair_index(z);
        const size_t n = z[p].size() / 2;
        std::vector<double> s;
        softmax_rows(z[1 - p], n, s);
        const double s_norm = norm2(s);
        const double y_norm = norm2(z[p].subspan(n));
        const double rp = radii[p], ra = radii[1 - p];
        return rp + s_norm * rp + 0.5 * ra * y_norm + 0.5 * ra * rp;
    }

private:
    int pair_class_;
};

// max_i ReLU(sum_a z_a)_i; the first maximal index receives the gradient.
class MaxReluOp final : public VertexOp {
public:
    std::string name() const override { return "max_relu"; }
    std::string check_signature(std::span<const int> cd, int y) const override {
        if (y != 1 || cd.empty()) return "expects Y=1 and at least one parent class";
        for (int d : cd)
            if (d != cd[0] || d < 1) return "all parent classes must share one positive Z dimension";
        return {};
    }
    static std::vector<double> sums(ClassArgs z) {
        std::vector<double> s(z[0].size(), 0.0);
        for (const Vec& za : z)
            for (size_t i = 0; i < s.size(); ++i) s[i] += za[i];
        return s;
    }
    void eval(ClassArgs z, MutVec y) const override {
        auto s = sums(z);
        y[0] = std::max(0.0, *std::max_element(s.begin(), s.end()));
    }
    void vjp(ClassArgs z, Vec ct_y, MutClassArgs ct_z) const override {
        auto s = sums(z);
        const size_t arg = std::max_element(s.begin(), s.end()) - s.begin();
        for (const MutVec& c : ct_z) {
            std::fill(c.begin(), c.end(), 0.0);
            if (s[arg] > 0) c[arg] = ct_y[0];
        }
    }
    void jvp(ClassArgs z, ClassArgs dz, MutVec dy) const override {
        auto s = sums(z);
        const size_t arg = std::max_element(s.begin(), s.end()) - s.begin();
        double d = 0;
        if (s[arg] > 0)
            for (const Vec& dza : dz) d += dza[arg];
        dy[0] = d;
    }
    double deviation_bound(ClassArgs, std::span<const double> radii) const override {
        double r = 0;
        for (double x : radii) r += x;
        return r;
    }
    bool smooth() const override { return false; }
};

using EdgeFactory = std::function<std::shared_ptr<const EdgeOp>(const nlohmann::json&)>;
using VertexFactory = std::function<std::shared_ptr<const VertexOp>(const nlohmann::json&)>;

const std::map<std::string, EdgeFactory>& edge_table() {
    static const std::map<std::string, EdgeFactory> t = {
        {"mul", [](const nlohmann::json&) { return std::make_shared<ScaleOp>("mul", true); }},
        {"scale", [](const nlohmann::json&) { return std::make_shared<ScaleOp>("scale", false); }},
        {"pair_scale", [](const nlohmann::json&) { return std::make_shared<PairScaleOp>(); }},
        {"copy", [](const nlohmann::json&) { return std::make_shared<CopyOp>(); }},
        {"pair_mul", [](const nlohmann::json&) { return std::make_shared<PairMulOp>(); }},
        {"conv2d_nopad", [](const nlohmann::json& p) { return std::make_shared<Conv2dOp>(p); }},
    };
    return t;
}

const std::map<std::string, VertexFactory>& vertex_table() {
    static const std::map<std::string, VertexFactory> t = {
        {"one", [](const nlohmann::json&) { return std::make_shared<OneOp>(); }},
        {"sum_identity", [](const nlohmann::json&) { return std::make_shared<SumActOp>("sum_identity", Act::Identity); }},
        {"add", [](const nlohmann::json&) { return std::make_shared<SumActOp>("add", Act::Identity); }},
        {"sum_relu", [](const nlohmann::json&) { return std::make_shared<SumActOp>("sum_relu", Act::Relu); }},
        {"sum_tanh", [](const nlohmann::json&) { return std::make_shared<SumActOp>("sum_tanh", Act::Tanh); }},
        {"sum_sin", [](const nlohmann::json&) { return std::make_shared<SumActOp>("sum_sin", Act::Sin); }},
        {"sqrt_bias_readout", [](const nlohmann::json&) { return std::make_shared<SqrtBiasReadoutOp>(); }},
        {"outer", [](const nlohmann::json&) { return std::make_shared<OuterOp>(); }},
        {"add_soft_mul", [](const nlohmann::json& p) { return std::make_shared<AddSoftMulOp>(p); }},
        {"max_relu", [](const nlohmann::json&) { return std::make_shared<MaxReluOp>(); }},
    };
    return t;
}

}  // namespace

std::shared_ptr<const EdgeOp> make_edge_op(const std::string& name, const nlohmann::json& params) {
    auto it = edge_table().find(name);
    if (it == edge_table().end()) throw UnknownPrimitive("unknown edge primitive '" + name + "'");
    return it->second(params.is_null() ? nlohmann::json::object() : params);
}

std::shared_ptr<const VertexOp> make_vertex_op(const std::string& name, const nlohmann::json& params) {
    auto it = vertex_table().find(name);
    if (it == vertex_table().end()) throw UnknownPrimitive("unknown vertex primitive '" + name + "'");
    return it->second(params.is_null() ? nlohmann::json::object() : params);
}

PrimitiveRef registry_lookup(const std::string& name, const nlohmann::json& params) {
    PrimitiveRef ref;
    if (edge_table().count(name)) ref.edge = make_edge_op(name, params);
    if (vertex_table().count(name)) ref.vertex = make_vertex_op(name, params);
    if (!ref.edge && !ref.vertex) throw UnknownPrimitive("unknown primitive '" + name + "'");
    return ref;
}

std::vector<std::string> edge_op_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : edge_table()) out.push_back(k);
    return out;
}

std::vector<std::string> vertex_op_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : vertex_table()) out.push_back(k);
    return out;
}

}  // namespace liftlab
