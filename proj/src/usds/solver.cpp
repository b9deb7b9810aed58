#include "flowdd/usds/solver.hpp"

#include "flowdd/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace flowdd::usds {

SolverInput SolverInput::from_global(const ScalarField& sdf_raw, const VelocityField& global, int offset,
                                     int width, int xi, std::optional<double> q_inlet, double sdf_max) {
    const BoundaryBand band(width, xi);
    SolverInput in;
    in.xi = xi;
    in.q_inlet = q_inlet;
    in.sdf = sdf_raw.crop(offset, width);
    for (double& v : in.sdf.values()) {
        v /= sdf_max;
    }
    in.boundary = VelocityField(in.sdf.grid());
    for (int j = 0; j < in.sdf.height(); ++j) {
        for (int i = 0; i < width; ++i) {
            if (band.contains_column(i)) {
                in.boundary.vx(i, j) = global.vx(offset + i, j);
                in.boundary.vy(i, j) = global.vy(offset + i, j);
            }
        }
    }
    return in;
}

VelocityField postprocess(const VelocityField& raw, const ScalarField& mask, const VelocityField& v_boundary,
                          int xi) {
    if (!raw.grid().same_shape(mask.grid()) || !raw.grid().same_shape(v_boundary.grid())) {
        fail(ErrorKind::Invariant, "postprocess: raw field, mask and boundary must share one grid shape");
    }
    const BoundaryBand band(raw.grid().width, xi);
    VelocityField out = raw;
    for (int j = 0; j < out.grid().height; ++j) {
        for (int i = 0; i < out.grid().width; ++i) {
            if (band.contains_column(i)) {
                out.vx(i, j) = v_boundary.vx(i, j);
                out.vy(i, j) = v_boundary.vy(i, j);
            } else {
                out.vx(i, j) *= mask(i, j);
                out.vy(i, j) *= mask(i, j);
            }
        }
    }
    return out;
}

ConstraintResult constraint_layer(const VelocityField& v, const ScalarField& mask, double q_inlet) {
    if (!(q_inlet > 0.0)) {
        fail(ErrorKind::Parameter, fmt::format("constraint layer needs q_inlet > 0, got {}", q_inlet));
    }
    if (!v.grid().same_shape(mask.grid())) {
        fail(ErrorKind::Invariant, "constraint layer: mask and field shapes differ");
    }
    ConstraintResult result{v, {}};
    const std::vector<double> q = flow_rate_profile(v.vx);
    const double guard = kFlowRateGuard * q_inlet;
    for (int i = 0; i < v.grid().width; ++i) {
        const double qi = q[static_cast<std::size_t>(i)];
        if (!(std::abs(qi) >= guard)) {
            result.flagged_columns.push_back(i);
            continue;
        }
        const double scale = q_inlet / qi;
        for (int j = 0; j < v.grid().height; ++j) {
            result.field.vx(i, j) *= scale;
        }
    }
    return result;
}

VelocityField SubdomainSolver::solve(const SolverInput& input) const {
    VelocityField raw = predict(input);
    if (!raw.grid().same_shape(input.grid())) {
        fail(ErrorKind::Model, fmt::format("{}: prediction is {}x{}, subdomain is {}x{}", name(),
                                           raw.grid().width, raw.grid().height, input.grid().width,
                                           input.grid().height));
    }
    const ScalarField mask = input.mask();
    VelocityField out = postprocess(raw, mask, input.boundary, input.xi);
    if (constrained_) {
        if (!input.q_inlet) {
            fail(ErrorKind::Config, fmt::format("{}: flow-rate constraint enabled but no q_inlet given", name()));
        }
        out = constraint_layer(out, mask, *input.q_inlet).field;
    }
    return out;
}

}  // namespace flowdd::usds
