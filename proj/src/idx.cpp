#include "afx/idx.hpp"

#include <zlib.h>

#include <cstring>

#include "afx/runtime.hpp"

namespace afx {

namespace {

// gzread transparently handles both gzip-compressed and plain files.
std::vector<uint8_t> read_all(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw MissingArtifact("dataset file not found: " + path.string());
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw MissingArtifact("cannot open dataset file: " + path.string());
    std::vector<uint8_t> out;
    uint8_t buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw ValidationError("gzip decode failed: " + path.string());
    return out;
}

uint32_t be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
           uint32_t(p[3]);
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
    auto bytes = read_all(path);
    if (bytes.size() < 16 || be32(bytes.data()) != 0x00000803u)
        throw ValidationError("not an IDX image file: " + path.string());
    IdxImages out;
    out.count = static_cast<int>(be32(bytes.data() + 4));
    out.rows = static_cast<int>(be32(bytes.data() + 8));
    out.cols = static_cast<int>(be32(bytes.data() + 12));
    const size_t need = 16 + static_cast<size_t>(out.count) * out.rows * out.cols;
    if (bytes.size() < need)
        throw ValidationError("truncated IDX image file: " + path.string());
    out.pixels.assign(bytes.begin() + 16, bytes.begin() + static_cast<long>(need));
    return out;
}

std::vector<uint8_t> read_idx_labels(const std::filesystem::path& path) {
    auto bytes = read_all(path);
    if (bytes.size() < 8 || be32(bytes.data()) != 0x00000801u)
        throw ValidationError("not an IDX label file: " + path.string());
    const size_t count = be32(bytes.data() + 4);
    if (bytes.size() < 8 + count)
        throw ValidationError("truncated IDX label file: " + path.string());
    return std::vector<uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + static_cast<long>(count));
}

}  // namespace afx
