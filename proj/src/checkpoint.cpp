#include "afx/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "afx/runtime.hpp"

namespace afx {

namespace {
constexpr char kMagic[8] = {'A', 'F', 'X', 'T', '0', '0', '0', '1'};
}

uint64_t arch_hash(const std::string& descriptor) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : descriptor) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void TensorFile::put(const std::string& name, const Tensor& t) {
    entries_.push_back({name, {t.n, t.c, t.h, t.w}, t.v});
}

void TensorFile::put_vec(const std::string& name, const std::vector<float>& v) {
    entries_.push_back({name, {static_cast<int>(v.size()), 1, 1, 1}, v});
}

void TensorFile::put_vec_d(const std::string& name, const std::vector<double>& v) {
    std::vector<float> f(v.begin(), v.end());
    put_vec(name, f);
}

bool TensorFile::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

const TensorFile::Entry& TensorFile::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw ValidationError("checkpoint tensor missing: " + name);
}

void TensorFile::get(const std::string& name, Tensor& t) const {
    const Entry& e = find(name);
    if (e.dims != std::array<int, 4>{t.n, t.c, t.h, t.w})
        throw ValidationError("checkpoint tensor shape mismatch for " + name);
    t.v = e.data;
}

void TensorFile::get_vec(const std::string& name, std::vector<float>& v) const {
    const Entry& e = find(name);
    v = e.data;
}

void TensorFile::get_vec_d(const std::string& name, std::vector<double>& v) const {
    const Entry& e = find(name);
    v.assign(e.data.begin(), e.data.end());
}

void TensorFile::save(const std::filesystem::path& path) const {
    nlohmann::json dir = nlohmann::json::array();
    size_t offset = 0;
    for (const auto& e : entries_) {
        dir.push_back({{"name", e.name},
                       {"dims", e.dims},
                       {"offset", offset},
                       {"count", e.data.size()}});
        offset += e.data.size();
    }
    nlohmann::json header = {{"meta", meta}, {"tensors", dir}};
    const std::string hs = header.dump();

    atomic_write(path, [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open for write: " + tmp.string());
        out.write(kMagic, sizeof kMagic);
        const uint64_t len = hs.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof len);
        out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        for (const auto& e : entries_)
            out.write(reinterpret_cast<const char*>(e.data.data()),
                      static_cast<std::streamsize>(e.data.size() * sizeof(float)));
        if (!out) throw ValidationError("short write: " + tmp.string());
    });
}

TensorFile TensorFile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("checkpoint not found: " + path.string());
    char magic[8];
    uint64_t len = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw ValidationError("not a checkpoint file: " + path.string());
    std::string hs(len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(len));
    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) throw ValidationError("corrupt checkpoint header: " + path.string());

    TensorFile tf;
    tf.meta = header.value("meta", nlohmann::json::object());
    for (const auto& d : header["tensors"]) {
        Entry e;
        e.name = d["name"].get<std::string>();
        auto dims = d["dims"].get<std::vector<int>>();
        std::copy_n(dims.begin(), 4, e.dims.begin());
        e.data.resize(d["count"].get<size_t>());
        in.read(reinterpret_cast<char*>(e.data.data()),
                static_cast<std::streamsize>(e.data.size() * sizeof(float)));
        tf.entries_.push_back(std::move(e));
    }
    if (!in) throw ValidationError("truncated checkpoint: " + path.string());
    return tf;
}

}  // namespace afx
