#include "flowdd/usds/stream.hpp"

#include "flowdd/error.hpp"

#include <fmt/format.h>

namespace flowdd::usds {

VelocityField stream_function_field(const ChannelGeometry& geom, const PixelGrid& grid, double q) {
    VelocityField v(grid);
    for (int i = 0; i < grid.width; ++i) {
        const double x = grid.x_center(i);
        const WallPoint w = wall_functions(geom, x);
        const WallPoint dw = wall_slopes(geom, x);
        const double h = w.y_upper - w.y_lower;
        if (!(h > 0.0)) {
            fail(ErrorKind::Geometry, fmt::format("channel closed at x = {} m", x));
        }
        for (int j = 0; j < grid.height; ++j) {
            const double s = (grid.y_center(j) - w.y_lower) / h;
            if (s <= 0.0 || s >= 1.0) {
                continue;
            }
            const double shape = 6.0 * q * s * (1.0 - s) / h;
            v.vx(i, j) = shape;
            v.vy(i, j) = shape * (dw.y_lower + s * (dw.y_upper - dw.y_lower));
        }
    }
    return v;
}

VelocityField StreamFunctionSolver::predict(const SolverInput& input) const {
    if (!input.q_inlet) {
        fail(ErrorKind::Config, "stream-function solver needs q_inlet");
    }
    return stream_function_field(geom_, input.grid(), *input.q_inlet);
}

}  // namespace flowdd::usds
