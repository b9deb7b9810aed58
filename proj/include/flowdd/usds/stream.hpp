#pragma once

#include "flowdd/geometry.hpp"
#include "flowdd/usds/solver.hpp"

namespace flowdd::usds {

/// Divergence-free synthetic flow through a known channel. With
/// s = (y - y_lower) / (y_upper - y_lower) the stream function is
/// psi = q (3 s^2 - 2 s^3), so vx = dpsi/dy is a parabola across every
/// cross-section carrying exactly q, and vy = -dpsi/dx follows the walls.
/// Zero outside the channel. Throws Geometry if the channel closes.
VelocityField stream_function_field(const ChannelGeometry& geom, const PixelGrid& grid, double q);

/// Backend that ignores the band inputs and evaluates the stream-function
/// flow for input.q_inlet at the subdomain's physical position.
class StreamFunctionSolver final : public SubdomainSolver {
public:
    explicit StreamFunctionSolver(ChannelGeometry geom, bool constrained = false)
        : SubdomainSolver(constrained), geom_(std::move(geom)) {}

    std::string name() const override { return "stream"; }
    const ChannelGeometry& geometry() const noexcept { return geom_; }

protected:
    VelocityField predict(const SolverInput& input) const override;

private:
    ChannelGeometry geom_;
};

}  // namespace flowdd::usds
