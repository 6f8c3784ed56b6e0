#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>

namespace afx {

// Process exit codes used by the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitTrainingFailure = 3;
inline constexpr int kExitMissingArtifact = 4;

// Bad configuration or unusable op inputs.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& m) : std::runtime_error(m) {}
};
// Non-finite losses or other unrecoverable optimisation breakdowns.
struct TrainingFailure : std::runtime_error {
    explicit TrainingFailure(const std::string& m) : std::runtime_error(m) {}
};
// A required input artifact (checkpoint, surrogate, dataset file) is absent.
struct MissingArtifact : std::runtime_error {
    explicit MissingArtifact(const std::string& m) : std::runtime_error(m) {}
};

// Pins BLAS to one thread and works around OpenBLAS DYNAMIC_ARCH cpu
// misdetection (hypervisors that mask the cpuid model string make 0.3.x fall
// back to generic Prescott kernels, ~4x slower than the AVX-512 ones). The
// core type is read in a library constructor, so when misdetection is seen on
// an AVX-512 machine the process re-execs itself once with
// OPENBLAS_CORETYPE set. Call first thing in main().
void init_compute(int argc, char** argv);

// Single-threaded variant for tests (no re-exec, just thread pinning).
void init_compute_quiet();

// Writes to "<path>.tmp<ext>" via `writer`, then renames onto `path` so
// readers never observe partial artifacts.
void atomic_write(const std::filesystem::path& path,
                  const std::function<void(const std::filesystem::path&)>& writer);

// Convenience: atomically replace `path` with `bytes`.
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);

}  // namespace afx
