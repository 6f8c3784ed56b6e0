#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "afx/data.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "afx/idx.hpp"
#include "afx/image.hpp"
#include "afx/runtime.hpp"

namespace afx {

namespace {

const std::map<std::string, int> kFashionClasses = {
    {"tshirt_top", 0}, {"trouser", 1}, {"pullover", 2}, {"dress", 3}, {"coat", 4},
    {"sandal", 5},     {"shirt", 6},   {"sneaker", 7},  {"bag", 8},   {"ankle_boot", 9},
};

struct IdxFileNames {
    const char* images;
    const char* labels;
};

IdxFileNames idx_names(Split split) {
    if (split == Split::train) return {"train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"};
    return {"t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"};
}

std::string default_mirror(DatasetId d) {
    if (d == DatasetId::fashion_mnist)
        return "https://github.com/zalandoresearch/fashion-mnist/raw/master/data/fashion/";
    return "https://github.com/fgnt/mnist/raw/master/";
}

// Downloads url (https) to path atomically. Throws MissingArtifact on any
// failure so the caller can surface a fetch-or-fail message.
void fetch_to(const std::string& url, const std::filesystem::path& path) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw MissingArtifact("bad mirror url: " + url);
    auto host_start = scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) throw MissingArtifact("bad mirror url: " + url);
    const std::string origin = url.substr(0, path_start);
    const std::string target = url.substr(path_start);

    httplib::Client cli(origin);
    cli.set_follow_location(true);
    cli.set_connection_timeout(20);
    cli.set_read_timeout(120);
    auto res = cli.Get(target);
    if (!res || res->status != 200)
        throw MissingArtifact("fetch failed (" + (res ? std::to_string(res->status) : "no response") +
                              "): " + url);
    atomic_write_bytes(path, res->body);
}

std::filesystem::path ensure_idx_file(const DataSourceSpec& src, const char* name) {
    const char* dir = src.dataset == DatasetId::fashion_mnist ? "fashion_mnist" : "mnist";
    std::filesystem::path path = src.cache_dir / dir / name;
    if (std::filesystem::exists(path)) return path;
    // Also accept pre-extracted files.
    std::filesystem::path plain = path;
    plain.replace_extension("");
    if (std::filesystem::exists(plain)) return plain;
    const std::string base = src.mirror.empty() ? default_mirror(src.dataset) : src.mirror;
    const std::string url = base + name;
    std::fprintf(stderr, "[data] %s missing, fetching %s\n", path.string().c_str(), url.c_str());
    try {
        fetch_to(url, path);
    } catch (const MissingArtifact& e) {
        throw MissingArtifact("dataset file " + path.string() +
                              " is missing and could not be fetched: " + e.what());
    }
    return path;
}

RawImageSet load_idx_subset(const DataSourceSpec& src, Split split) {
    const int ia = dataset_class_index(src.dataset, src.class_a);
    const int ib = dataset_class_index(src.dataset, src.class_b);
    if (ia == ib)
        throw ValidationError("class_a and class_b are the same class: " + src.class_a);
    const auto names = idx_names(split);
    const auto images = read_idx_images(ensure_idx_file(src, names.images));
    const auto labels = read_idx_labels(ensure_idx_file(src, names.labels));
    if (static_cast<size_t>(images.count) != labels.size())
        throw ValidationError("image/label count mismatch in idx pair");

    std::vector<int> keep;
    for (int i = 0; i < images.count; ++i)
        if (labels[i] == ia || labels[i] == ib) keep.push_back(i);

    RawImageSet out;
    out.class_names = {src.class_a, src.class_b};
    out.images = Tensor(static_cast<int>(keep.size()), 1, images.rows, images.cols);
    out.labels.resize(keep.size());
    const size_t px = static_cast<size_t>(images.rows) * images.cols;
    for (size_t t = 0; t < keep.size(); ++t) {
        const uint8_t* srcpx = images.pixels.data() + keep[t] * px;
        float* dst = out.images.at(static_cast<int>(t));
        for (size_t q = 0; q < px; ++q) dst[q] = srcpx[q];
        out.labels[t] = labels[keep[t]] == ia ? 0 : 1;
    }
    return out;
}

RawImageSet load_custom_subset(const DataSourceSpec& src, Split split) {
    namespace fs = std::filesystem;
    if (src.class_a == src.class_b)
        throw ValidationError("class_a and class_b are the same class: " + src.class_a);
    fs::path root = src.custom_root;
    if (root.empty()) throw ConfigError("custom_dir dataset needs data.custom_root");
    // Optional train/test subdirectories; otherwise both splits read the
    // class folders directly.
    if (fs::is_directory(root / split_name(split))) root /= split_name(split);
    RawImageSet out;
    out.class_names = {src.class_a, src.class_b};

    std::vector<std::pair<fs::path, uint8_t>> files;
    for (int cls = 0; cls < 2; ++cls) {
        const fs::path dir = root / out.class_names[cls];
        if (!fs::is_directory(dir))
            throw MissingArtifact("class folder not found: " + dir.string());
        std::vector<fs::path> paths;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file()) paths.push_back(e.path());
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) files.push_back({p, static_cast<uint8_t>(cls)});
    }
    if (files.empty()) throw MissingArtifact("no images under " + root.string());

    Tensor first = read_image(files[0].first, src.grayscale);
    out.images = Tensor(static_cast<int>(files.size()), first.c, first.h, first.w);
    out.labels.resize(files.size());
    for (size_t t = 0; t < files.size(); ++t) {
        Tensor img = t == 0 ? std::move(first) : read_image(files[t].first, src.grayscale);
        if (img.c != out.images.c || img.h != out.images.h || img.w != out.images.w)
            throw ValidationError("inconsistent image shape: " + files[t].first.string() +
                                  " is " + img.shape_str() + " vs " + out.images.shape_str());
        std::copy(img.v.begin(), img.v.end(), out.images.at(static_cast<int>(t)));
        out.labels[t] = files[t].second;
    }
    return out;
}

}  // namespace

int dataset_class_index(DatasetId dataset, const std::string& name) {
    if (dataset == DatasetId::fashion_mnist) {
        auto it = kFashionClasses.find(name);
        if (it != kFashionClasses.end()) return it->second;
    }
    // Digits and explicit indices.
    if (!name.empty() && name.find_first_not_of("0123456789") == std::string::npos) {
        const int v = std::stoi(name);
        if (v >= 0 && v <= 9) return v;
    }
    throw ValidationError("unknown class id '" + name + "'");
}

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

void LabeledImageSet::validate() const {
    if (static_cast<size_t>(images.n) != labels.size())
        throw ValidationError("image/label count mismatch");
    for (uint8_t l : labels)
        if (l > 1) throw ValidationError("labels must be 0 or 1");
    for (float v : images.v)
        if (!(v >= -1.0f && v <= 1.0f))
            throw ValidationError("pixel outside [-1,1] after preprocessing");
}

std::array<int, 2> LabeledImageSet::label_counts() const {
    std::array<int, 2> n{0, 0};
    for (uint8_t l : labels) n[l]++;
    return n;
}

RawImageSet load_binary_subset(const DataSourceSpec& src, Split split) {
    RawImageSet out = src.dataset == DatasetId::custom_dir ? load_custom_subset(src, split)
                                                           : load_idx_subset(src, split);
    std::array<int, 2> counts{0, 0};
    for (uint8_t l : out.labels) counts[l]++;
    std::fprintf(stderr, "[data] %s split: %d x %s + %d x %s (%dx%d, %d ch)\n",
                 split_name(split), counts[0], out.class_names[0].c_str(), counts[1],
                 out.class_names[1].c_str(), out.images.h, out.images.w, out.images.c);
    return out;
}

LabeledImageSet preprocess(const RawImageSet& raw, const PreprocessSpec& spec) {
    const int r = spec.target_resolution;
    if (r < 1 || (r & (r - 1)) != 0)
        throw ValidationError("target_resolution must be a power of two");
    for (float v : raw.images.v)
        if (!(v >= 0.0f && v <= 255.0f)) throw ValidationError("raw pixel outside [0,255]");

    LabeledImageSet out;
    out.labels = raw.labels;
    out.class_names = raw.class_names;
    out.images = Tensor(raw.images.n, raw.images.c, r, r);
    std::vector<float> tmp(static_cast<size_t>(r) * r);
    for (int i = 0; i < raw.images.n; ++i) {
        for (int ch = 0; ch < raw.images.c; ++ch) {
            if (spec.filter == PreprocessSpec::Filter::bilinear)
                resize_bilinear(raw.images.plane(i, ch), raw.images.h, raw.images.w,
                                tmp.data(), r, r);
            else
                resize_nearest(raw.images.plane(i, ch), raw.images.h, raw.images.w,
                               tmp.data(), r, r);
            float* dst = out.images.plane(i, ch);
            for (size_t q = 0; q < tmp.size(); ++q) dst[q] = tmp[q] / 127.5f - 1.0f;
        }
    }
    out.validate();
    return out;
}

}  // namespace afx
