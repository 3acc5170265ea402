#pragma once

#include <span>
#include <vector>

namespace liftlab {

// A family of real vector spaces indexed by 0..size-1, stored as dimensions.
class Bundle {
public:
    Bundle() : offsets_{0} {}
    explicit Bundle(std::vector<int> dims);

    int size() const { return static_cast<int>(dims_.size()); }
    int dim(int i) const { return dims_[i]; }
    int offset(int i) const { return offsets_[i]; }
    int total() const { return offsets_.back(); }
    std::span<const int> dims() const { return dims_; }

    friend bool operator==(const Bundle& a, const Bundle& b) { return a.dims_ == b.dims_; }

private:
    std::vector<int> dims_;
    std::vector<int> offsets_;
};

// A section assigns a vector of dimension bundle.dim(i) to every index i.
// Values are stored contiguously in index order.
struct Section {
    Bundle bundle;
    std::vector<double> values;

    Section() = default;
    explicit Section(Bundle b, double fill = 0.0)
        : bundle(std::move(b)), values(bundle.total(), fill) {}

    std::span<double> at(int i) { return {values.data() + bundle.offset(i), static_cast<size_t>(bundle.dim(i))}; }
    std::span<const double> at(int i) const {
        return {values.data() + bundle.offset(i), static_cast<size_t>(bundle.dim(i))};
    }
};

// Bundle over the source of m whose fibre at u is the fibre of y at m[u].
Bundle pullback(const Bundle& y, std::span<const int> m);

// Section over the source of m with s at m[u] copied to u.
Section pullback(const Section& s, std::span<const int> m);

}  // namespace liftlab
