#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace afx {

// IDX is the MNIST-family container: big-endian magic (0x00000803 for
// 3-d uint8 image stacks, 0x00000801 for 1-d uint8 label vectors) followed by
// big-endian u32 dimension sizes, then raw bytes. Files may be gzip-compressed.
struct IdxImages {
    int count = 0, rows = 0, cols = 0;
    std::vector<uint8_t> pixels;  // count*rows*cols
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<uint8_t> read_idx_labels(const std::filesystem::path& path);

}  // namespace afx
