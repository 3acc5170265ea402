#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "liftlab/train.hpp"

namespace liftlab {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
    int count = 0, rows = 0, cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
};

struct IdxLabels {
    std::vector<std::uint8_t> labels;
};

// Big-endian IDX readers. `limit` >= 0 stops after that many items.
// Throw BadMagic on a wrong magic number, TruncatedFile when the payload is
// shorter than the header announces, IoError when the file cannot be opened.
IdxImages read_idx_images(std::istream& in, int limit = -1);
IdxLabels read_idx_labels(std::istream& in, int limit = -1);
IdxImages load_idx_images(const std::string& path, int limit = -1);
IdxLabels load_idx_labels(const std::string& path, int limit = -1);

void write_idx_images(std::ostream& out, const IdxImages& images);
void write_idx_labels(std::ostream& out, const IdxLabels& labels);

// Pixels scaled to [0, 1] as inputs, labels one-hot over `classes` as targets.
Dataset idx_dataset(const IdxImages& images, const IdxLabels& labels, int classes = 10);
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path, int limit = -1);

}  // namespace liftlab
