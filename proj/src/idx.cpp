#include "liftlab/idx.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "liftlab/errors.hpp"

namespace liftlab {

namespace {

std::uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw TruncatedFile(std::string("IDX header ends before the ") + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) | b[3];
}

void write_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
    out.write(b, 4);
}

void check_magic(std::uint32_t got, std::uint32_t want) {
    if (got == want) return;
    char buf[64];
    std::snprintf(buf, sizeof buf, "IDX magic 0x%08x, expected 0x%08x", got, want);
    throw BadMagic(buf);
}

void read_payload(std::istream& in, std::vector<std::uint8_t>& dst, size_t n) {
    dst.resize(n);
    in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw TruncatedFile("IDX payload has " + std::to_string(in.gcount()) + " of " + std::to_string(n) + " bytes");
}

std::ifstream open(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

}  // namespace

IdxImages read_idx_images(std::istream& in, int limit) {
    check_magic(read_u32(in, "magic number"), kIdxImageMagic);
    IdxImages im;
    const std::uint32_t count = read_u32(in, "item count");
    im.rows = static_cast<int>(read_u32(in, "row count"));
    im.cols = static_cast<int>(read_u32(in, "column count"));
    im.count = static_cast<int>(limit >= 0 ? std::min<std::uint32_t>(count, limit) : count);
    read_payload(in, im.pixels, static_cast<size_t>(im.count) * im.rows * im.cols);
    return im;
}

IdxLabels read_idx_labels(std::istream& in, int limit) {
    check_magic(read_u32(in, "magic number"), kIdxLabelMagic);
    const std::uint32_t count = read_u32(in, "item count");
    IdxLabels lb;
    read_payload(in, lb.labels, limit >= 0 ? std::min<std::uint32_t>(count, limit) : count);
    return lb;
}

IdxImages load_idx_images(const std::string& path, int limit) {
    auto in = open(path);
    return read_idx_images(in, limit);
}

IdxLabels load_idx_labels(const std::string& path, int limit) {
    auto in = open(path);
    return read_idx_labels(in, limit);
}

void write_idx_images(std::ostream& out, const IdxImages& images) {
    write_u32(out, kIdxImageMagic);
    write_u32(out, images.count);
    write_u32(out, images.rows);
    write_u32(out, images.cols);
    out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(std::ostream& out, const IdxLabels& labels) {
    write_u32(out, kIdxLabelMagic);
    write_u32(out, static_cast<std::uint32_t>(labels.labels.size()));
    out.write(reinterpret_cast<const char*>(labels.labels.data()), static_cast<std::streamsize>(labels.labels.size()));
}

Dataset idx_dataset(const IdxImages& images, const IdxLabels& labels, int classes) {
    if (static_cast<int>(labels.labels.size()) != images.count)
        throw ShapeMismatch(std::to_string(images.count) + " images but " + std::to_string(labels.labels.size()) +
                            " labels");
    Dataset ds;
    ds.input_dim = images.rows * images.cols;
    ds.k = classes;
    ds.inputs.resize(images.pixels.size());
    for (size_t i = 0; i < images.pixels.size(); ++i) ds.inputs[i] = images.pixels[i] / 255.0;
    ds.targets.assign(static_cast<size_t>(images.count) * classes, 0.0);
    for (int i = 0; i < images.count; ++i) {
        const int y = labels.labels[i];
        if (y >= classes) throw ShapeMismatch("label " + std::to_string(y) + " outside " + std::to_string(classes) + " classes");
        ds.targets[static_cast<size_t>(i) * classes + y] = 1.0;
    }
    return ds;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path, int limit) {
    return idx_dataset(load_idx_images(images_path, limit), load_idx_labels(labels_path, limit));
}

}  // namespace liftlab
