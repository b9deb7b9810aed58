#pragma once

#include "flowdd/geometry.hpp"
#include "flowdd/grid.hpp"

namespace flowdd {

/// Distance from each pixel center to the channel walls (upper and lower
/// curves plus the vertical facets at wall jumps). Zero on the walls and
/// outside the channel, so the result is non-negative everywhere.
///
/// The distance to each wall curve is minimized directly over x: dense
/// sampling of the search interval followed by golden-section refinement
/// down to kSdfTolerance.
ScalarField compute_sdf(const ChannelGeometry& geom, const PixelGrid& grid);

/// Distance of a single point (x, y) to the walls, 0 outside the channel.
double wall_distance(const ChannelGeometry& geom, double x, double y);

inline constexpr double kSdfTolerance = 1.0e-12;

/// Normalizer that maps the SDF of a 1 mm channel onto [0, 1].
inline constexpr double kSdfMax = 5.0e-4;

}  // namespace flowdd
