#pragma once

// Parametric stenotic channels, the global sampling window and the
// training-subdomain extraction scheme.
//
// A channel consists of a straight inlet, a stenotic region made of cosine
// bump segments, and a straight outlet. Within a segment starting at x0 with
// length l the walls are
//
//   y_lower(x) = (d/2) (f_lower/2) (1 + cos(2 pi (x - x0) / l))
//   y_upper(x) = d/2 + (d/2) (1 - (f_upper/2) (1 + cos(2 pi (x - x0) / l)))
//
// so the constriction is strongest at the segment ends and vanishes at the
// segment midpoint. Adjacent segments with different strengths therefore
// meet with a jump in wall height; such jumps are closed by vertical wall
// facets (see wall_jumps). WallPhase::Smooth swaps the phase to 1 - cos,
// which removes the jumps.

#include "flowdd/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace flowdd {

inline constexpr double kMinStrength = 0.05;
inline constexpr double kMaxStrength = 0.7;
inline constexpr double kMinRelLength = 0.4;
inline constexpr double kMaxRelLength = 1.5;

struct StenosisSegment {
    double rel_length = 1.0; ///< relative length before normalization
    double f_lower = 0.0;
    double f_upper = 0.0;
    double x0 = 0.0;         ///< m, segment start
    double length = 0.0;     ///< m, after normalization

    bool operator==(const StenosisSegment&) const = default;
};

enum class WallPhase { Verbatim, Smooth };

struct ChannelGeometry {
    double d_artery = 1.0e-3;
    double L_inlet = 7.0e-3;
    double L_stenotic = 1.0e-2;
    double L_outlet = 7.0e-3;
    std::vector<StenosisSegment> segments;
    std::uint64_t rng_seed = 0;
    WallPhase phase = WallPhase::Verbatim;

    double total_length() const noexcept { return L_inlet + L_stenotic + L_outlet; }
    double stenotic_begin() const noexcept { return L_inlet; }
    double stenotic_end() const noexcept { return L_inlet + L_stenotic; }

    bool operator==(const ChannelGeometry&) const = default;
};

/// Straight channel with canonical region lengths and no stenosis.
ChannelGeometry straight_channel(double d_artery = 1.0e-3);

/// Builds a geometry from (rel_length, f_lower, f_upper) triples. Lengths
/// are normalized so that they fill L_stenotic; strengths are validated
/// against [kMinStrength, kMaxStrength] (Parameter error otherwise).
ChannelGeometry make_stenotic_channel(const std::vector<StenosisSegment>& segments,
                                      double d_artery = 1.0e-3, double L_inlet = 7.0e-3,
                                      double L_stenotic = 1.0e-2, double L_outlet = 7.0e-3);

struct WallPoint {
    double y_lower = 0.0;
    double y_upper = 0.0;
};

/// Wall heights at x. Throws Extent outside [0, total_length].
WallPoint wall_functions(const ChannelGeometry& geom, double x);

/// d/dx of both walls at x (zero in the straight parts).
WallPoint wall_slopes(const ChannelGeometry& geom, double x);

/// A point where the walls may jump: left and right limits of both walls.
struct WallJump {
    double x = 0.0;
    WallPoint left;
    WallPoint right;
};

/// All segment boundaries, including the start and end of the stenotic region.
std::vector<WallJump> wall_jumps(const ChannelGeometry& geom);

/// Segment count and parameters drawn from a seeded counter-based stream.
/// n_segment is drawn from {1, 2, 3} when not given.
ChannelGeometry random_geometry(std::uint64_t seed, std::optional<int> n_segment = std::nullopt);

enum class ScaleMode { Duplicate, Random };

/// Lengthens the stenotic region by `factor` in {2, 4, 8}. Duplicate copies
/// the base segments `factor` times; Random draws factor * n fresh segments.
ChannelGeometry scaled_geometry(const ChannelGeometry& base, int factor, ScaleMode mode);

struct SamplingWindow {
    double x_start = 4.0e-3;
    double x_end = 2.2e-2;
    int width = 2305;
    int height = 128;

    /// Global grid: column 0 is centered on x_start, the last column on x_end.
    PixelGrid grid(double d_artery) const;
};

/// Window from 0.4 cm to (total length - 0.2 cm) at dx = d / height. For the
/// canonical 2.4 cm channel this is the 2305 x 128 grid.
SamplingWindow default_window(const ChannelGeometry& geom, int height = 128);

struct Raster {
    ScalarField sdf;
    ScalarField mask;
};

/// SDF and mask on the window's global grid. Throws Extent if the window
/// leaves the geometry.
Raster rasterize(const ChannelGeometry& geom, const SamplingWindow& window);

/// Global column whose center is closest to the start of the stenotic region.
int stenotic_start_column(const ChannelGeometry& geom, const SamplingWindow& window);

/// 9 non-overlapping offsets 0, 256, ..., 2048 followed by 4 sets of 5
/// consecutive subdomains starting at stenotic_column + k * 50, k = 1..4.
std::vector<int> extract_training_subdomains(int global_width, int stenotic_column,
                                             int sub_width = 256);

void write_geometry(const std::filesystem::path& path, const ChannelGeometry& geom);
ChannelGeometry read_geometry(const std::filesystem::path& path);

}  // namespace flowdd
