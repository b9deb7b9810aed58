#pragma once

// Command implementations behind the flowdd executable. Every command takes
// a plain options struct, writes its artifacts atomically and returns an
// exit code; errors surface as exceptions that main_entry maps to codes.

#include "flowdd/geometry.hpp"
#include "flowdd/schwarz.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flowdd::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kSolverError = 4, kDiverged = 5 };

enum class Backend { Cnn, Stream, Laplace };
const char* to_string(Backend b);
Backend parse_backend(const std::string& s);

struct RunConfig {
    std::optional<std::filesystem::path> geometry_file;
    std::uint64_t seed = 0;  ///< geometry seed when no file is given
    int height = 128;        ///< pixels across the artery
    int sub_width = 256;
    int xi = 1;
    std::optional<int> delta;  ///< defaults to 2 xi
    double epsilon = 1.0e-5;
    int max_iterations = 200;
    schwarz::InitMode init_mode = schwarz::InitMode::Parabolic;
    int threads = 1;
    Backend backend = Backend::Stream;
    std::filesystem::path weights;
    bool constrained = false;
    double v_max_inlet = 0.3;  ///< m/s
    std::optional<std::filesystem::path> reference;  ///< directory with vx.csv / vy.csv
    std::filesystem::path out = "out";
    bool timing = true;  ///< wall-clock column of the trace; 0 when false

    int delta_or_default() const noexcept { return delta.value_or(2 * xi); }
    /// Throws Config on values outside the solver and decomposition preconditions.
    void validate() const;
};

/// INI with sections [geometry] [decomposition] [schwarz] [solver] [flow] [output].
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_ini(const RunConfig& cfg);

struct GenerateOptions {
    std::uint64_t seed = 0;
    int count = 1;
    std::filesystem::path out = "geometries";
    bool straight = false;
    std::optional<double> strength;  ///< overrides every f_lower / f_upper
    bool descriptions_only = false;
    int height = 128;
};

struct SynthesizeOptions {
    std::filesystem::path geometries = "geometries";
    std::uint64_t seed = 0;
    double v_min = kMinInletVelocity;
    double v_max = kMaxInletVelocity;
    int xi = 1;
    int height = 128;
    int sub_width = 256;
    std::filesystem::path out = "dataset";
};

struct ScalabilityOptions {
    RunConfig run;
    std::vector<int> factors{2, 4, 8};
    ScaleMode mode = ScaleMode::Duplicate;
};

struct EvaluateOptions {
    std::optional<std::filesystem::path> reference;   ///< directory with vx.csv / vy.csv
    std::optional<std::filesystem::path> prediction;  ///< directory with vx.csv / vy.csv
    std::optional<std::filesystem::path> mask;        ///< mask or SDF CSV; all ones if absent
    std::vector<std::filesystem::path> reports;       ///< report.json files to bin
    std::filesystem::path out = "evaluation";
};

int cmd_generate(const GenerateOptions& opt);
int cmd_synthesize(const SynthesizeOptions& opt);
int cmd_run(const RunConfig& cfg);
int cmd_scalability(const ScalabilityOptions& opt);
int cmd_evaluate(const EvaluateOptions& opt);
int cmd_inspect_weights(const std::filesystem::path& path);

/// Geometry file name for index k, e.g. geom_00042.ini.
std::string geometry_name(int k);
/// Seed of the k-th geometry drawn from `seed`.
std::uint64_t geometry_seed(std::uint64_t seed, int k);

/// Parses argv, dispatches and maps exceptions to exit codes.
int main_entry(int argc, char** argv);

}  // namespace flowdd::cli
