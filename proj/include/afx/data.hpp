#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "afx/tensor.hpp"

namespace afx {

enum class DatasetId { fashion_mnist, mnist, custom_dir };
enum class Split { train, test };

struct DataSourceSpec {
    DatasetId dataset = DatasetId::fashion_mnist;
    std::string class_a = "ankle_boot";  // becomes label 0
    std::string class_b = "sneaker";     // becomes label 1
    std::filesystem::path cache_dir = "data";
    std::filesystem::path custom_root;  // custom_dir only
    std::string mirror;                 // optional download base URL override
    bool grayscale = true;
};

struct PreprocessSpec {
    int target_resolution = 128;
    enum class Filter { bilinear, nearest } filter = Filter::bilinear;
};

// Images straight off the source: values in [0,255], native resolution.
struct RawImageSet {
    Tensor images;  // (N, C, H, W)
    std::vector<uint8_t> labels;
    std::array<std::string, 2> class_names;
};

// Canonical training/eval container: values in [-1,1] at the pipeline
// resolution, labels 0 (class_a) / 1 (class_b).
struct LabeledImageSet {
    Tensor images;  // (N, C, H, W)
    std::vector<uint8_t> labels;
    std::array<std::string, 2> class_names;

    // Enforces the container contract: one label per image, labels in {0,1},
    // pixels in [-1,1].
    void validate() const;
    std::array<int, 2> label_counts() const;
};

// Loads the two requested classes of one split, relabelled a->0, b->1.
// Dataset files are read from the cache (fetched over https on first use for
// the idx datasets); custom_dir reads two folders of image files, one per
// class, optionally under per-split subdirectories.
RawImageSet load_binary_subset(const DataSourceSpec& src, Split split);

// Resizes to target resolution and maps [0,255] -> [-1,1] via v/127.5 - 1.
LabeledImageSet preprocess(const RawImageSet& raw, const PreprocessSpec& spec);

// Class-name <-> index helpers for the built-in datasets.
int dataset_class_index(DatasetId dataset, const std::string& name);
const char* split_name(Split s);

}  // namespace afx
