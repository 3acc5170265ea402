#include "liftlab/bundle.hpp"

#include <algorithm>
#include <string>

#include "liftlab/errors.hpp"

namespace liftlab {

Bundle::Bundle(std::vector<int> dims) : dims_(std::move(dims)), offsets_(dims_.size() + 1, 0) {
    for (size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i] < 0) throw ShapeMismatch("negative fibre dimension at index " + std::to_string(i));
        offsets_[i + 1] = offsets_[i] + dims_[i];
    }
}

Bundle pullback(const Bundle& y, std::span<const int> m) {
    std::vector<int> dims(m.size());
    for (size_t u = 0; u < m.size(); ++u) {
        if (m[u] < 0 || m[u] >= y.size())
            throw IndexMismatch("pullback index " + std::to_string(m[u]) + " out of range");
        dims[u] = y.dim(m[u]);
    }
    return Bundle(std::move(dims));
}

Section pullback(const Section& s, std::span<const int> m) {
    Section out(pullback(s.bundle, m));
    for (size_t u = 0; u < m.size(); ++u) {
        auto src = s.at(m[u]);
        std::copy(src.begin(), src.end(), out.at(static_cast<int>(u)).begin());
    }
    return out;
}

}  // namespace liftlab
