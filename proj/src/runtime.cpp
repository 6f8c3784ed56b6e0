#include "afx/runtime.hpp"

#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <vector>

extern "C" {
// Provided by libopenblas; not exposed by the distro cblas.h.
char* openblas_get_corename(void);
void openblas_set_num_threads(int);
}

namespace afx {

namespace {

bool cpu_has_avx512() {
    std::ifstream f("/proc/cpuinfo");
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("flags", 0) == 0) return line.find("avx512f") != std::string::npos;
    }
    return false;
}

}  // namespace

void init_compute_quiet() { openblas_set_num_threads(1); }

void init_compute(int argc, char** argv) {
    openblas_set_num_threads(1);
    if (std::getenv("AFX_BLAS_REEXECED") || std::getenv("OPENBLAS_CORETYPE")) return;
    const char* core = openblas_get_corename();
    if (core && std::strcmp(core, "Prescott") == 0 && cpu_has_avx512()) {
        // Misdetected: pick the AVX-512 kernels explicitly and restart.
        setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 1);
        setenv("AFX_BLAS_REEXECED", "1", 1);
        std::vector<char*> args(argv, argv + argc);
        args.push_back(nullptr);
        execv("/proc/self/exe", args.data());
        // If exec fails we keep running on the slow kernels; results are the
        // same, only slower.
    }
}

void atomic_write(const std::filesystem::path& path,
                  const std::function<void(const std::filesystem::path&)>& writer) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path.parent_path() /
                   (path.stem().string() + ".tmp" + path.extension().string());
    writer(tmp);
    fs::rename(tmp, path);
}

void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    atomic_write(path, [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open for write: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ValidationError("short write: " + tmp.string());
    });
}

}  // namespace afx
