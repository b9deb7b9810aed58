#pragma once

// Overlapping decomposition and the alternating red-black Schwarz loop.
//
// Subdomain n covers global columns [n (W - delta), n (W - delta) + W).
// Each iteration solves the even (red) subdomains from the current global
// field, writes them back, then solves the odd (black) subdomains from the
// half-updated field. The outer band of the first and last subdomain holds
// the prescribed inlet / outlet profiles and is never overwritten.

#include "flowdd/grid.hpp"
#include "flowdd/metrics.hpp"
#include "flowdd/sdf.hpp"
#include "flowdd/usds/solver.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace flowdd::schwarz {

struct SubdomainLayout {
    int global_width = 0;
    int width = 256;
    int delta = 2;
    int xi = 1;
    std::vector<int> offsets;

    int count() const noexcept { return static_cast<int>(offsets.size()); }
    /// N W - (N - 1) delta; columns at or beyond this index are never updated.
    int covered_width() const noexcept;
    static bool is_red(int n) noexcept { return n % 2 == 0; }
};

/// Left-anchored layout with the largest N that fits in `global_width`.
/// Throws Parameter naming the violated bound unless 2 xi <= delta <= W - xi,
/// and unless W <= global_width.
SubdomainLayout decompose(int global_width, int width, int delta, int xi);

enum class InitMode { None, Parabolic };
enum class Status { Converged, Stagnated, Diverged, MaxIter };

const char* to_string(InitMode m);
const char* to_string(Status s);
InitMode parse_init_mode(const std::string& s);

struct SchwarzConfig {
    double epsilon = 1.0e-5;  ///< m/s
    int max_iterations = 200;
    InitMode init_mode = InitMode::Parabolic;
    int stagnation_window = 5;
    double stagnation_threshold = 1.0e-3;
    int divergence_window = 5;
    double divergence_factor = 10.0;
    int threads = 1;

    /// Throws Config on a non-positive epsilon, window or iteration limit.
    void validate() const;
};

/// Global inputs shared by every subdomain solve.
struct SchwarzProblem {
    ScalarField sdf;  ///< raw global SDF in meters
    double sdf_max = kSdfMax;
    std::optional<double> q_inlet;  ///< m^2/s
};

/// Developed profiles for the outer bands, each xi columns wide.
struct BoundaryProfiles {
    VelocityField inlet;
    VelocityField outlet;

    /// Inlet band [0, xi) and the last subdomain's outer band cut out of `field`.
    static BoundaryProfiles from_field(const VelocityField& field, const SubdomainLayout& layout);
};

struct SchwarzState {
    VelocityField field;
    std::vector<char> immutable;  ///< per global column
};

/// Zero field with the inlet / outlet bands set from `profiles`. In
/// Parabolic mode every other band column receives a parabola over the open
/// rows of the mask carrying q_inlet. Throws Config if the profiles do not
/// match the layout or q_inlet is missing in Parabolic mode.
SchwarzState initialize(const SubdomainLayout& layout, const SchwarzProblem& problem, InitMode mode,
                        const BoundaryProfiles& profiles);

struct IterationResult {
    double abs_err = 0.0;  ///< max |v^{k+1} - v^k| over both components, covered columns
    Pixel argmax;          ///< global pixel of abs_err
};

/// One red-black cycle in place. A Numeric error from a solve is rethrown
/// as Numeric, any other error as Solver; both name the subdomain index.
/// `write_counts`, if given, gets +1 per global pixel written.
IterationResult red_black_iterate(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                                  const SchwarzProblem& problem, SchwarzState& state, int threads = 1,
                                  std::vector<int>* write_counts = nullptr);

struct IterationRecord {
    int iteration = 0;
    double abs_err = 0.0;
    Pixel argmax;
    double wall_ms = 0.0;
};

struct SchwarzTrace {
    std::vector<IterationRecord> history;
    Status status = Status::MaxIter;
    int iterations = 0;
    std::string message;
    VelocityField field;
};

/// Called after every iteration with the iteration index and the current field.
using Observer = std::function<void(int, const VelocityField&)>;

/// Iterates until one rule fires, checked in this order after each cycle:
///   non-finite field or Numeric solver error          -> Diverged
///   abs_err <= epsilon                                -> Converged
///   abs_err rose in each of the last divergence_window
///   cycles and exceeds divergence_factor * running min -> Diverged
///   |A_k - A_{k-w}| / A_{k-w} < stagnation_threshold   -> Stagnated
///   k == max_iterations                               -> MaxIter
SchwarzTrace run(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                 const SchwarzProblem& problem, SchwarzState state, const SchwarzConfig& config,
                 const Observer& observer = {});

/// One cycle in which every subdomain reads its band from `truth`; red
/// results are written first, then black.
VelocityField gre_star_field(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                             const SchwarzProblem& problem, const VelocityField& truth, int threads = 1);

/// GRE of gre_star_field against `truth` over the covered columns.
metrics::GreReport gre_star(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                            const SchwarzProblem& problem, const VelocityField& truth, int threads = 1);

/// One line per iteration "k abs_err i j ms", then "status <name> <k>".
std::string trace_text(const SchwarzTrace& trace);
void write_trace(const std::filesystem::path& path, const SchwarzTrace& trace);

}  // namespace flowdd::schwarz
