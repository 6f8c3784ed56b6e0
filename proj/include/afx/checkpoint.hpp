#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "afx/tensor.hpp"

namespace afx {

// Self-describing binary artifact: magic, a JSON header (free-form `meta`
// plus a tensor directory), then little-endian float32 payload. All artifact
// writes go through atomic_write.
struct TensorFile {
    nlohmann::json meta;

    void put(const std::string& name, const Tensor& t);
    void put_vec(const std::string& name, const std::vector<float>& v);
    void put_vec_d(const std::string& name, const std::vector<double>& v);

    bool has(const std::string& name) const;
    // Shape must match exactly; throws ValidationError otherwise.
    void get(const std::string& name, Tensor& t) const;
    void get_vec(const std::string& name, std::vector<float>& v) const;
    void get_vec_d(const std::string& name, std::vector<double>& v) const;

    void save(const std::filesystem::path& path) const;
    static TensorFile load(const std::filesystem::path& path);

   private:
    struct Entry {
        std::string name;
        std::array<int, 4> dims;
        std::vector<float> data;
    };
    std::vector<Entry> entries_;
    const Entry& find(const std::string& name) const;
};

// FNV-1a over an architecture descriptor; stored in checkpoints and verified
// on load so weights never silently attach to a different graph.
uint64_t arch_hash(const std::string& descriptor);

}  // namespace afx
