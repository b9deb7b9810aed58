#pragma once

// Universal subdomain solver (USDS) contract.
//
// Every backend maps the same input (normalized SDF plus the velocities in
// the input boundary band B_xi) to a velocity field on the subdomain grid.
// SubdomainSolver::solve wraps the backend prediction with the shared
// post-processing, in this order:
//
//   1. raw prediction multiplied by the mask (no-slip outside the channel)
//   2. band columns overwritten with the input boundary velocities
//   3. optional flow-rate constraint, vx(i, j) *= q_inlet / q(i)
//
// Step 3 runs after the overwrite, so with the constraint enabled the band
// columns are rescaled as well; overwriting again would break q(i) = q_inlet.

#include "flowdd/grid.hpp"
#include "flowdd/sdf.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flowdd::usds {

struct SolverInput {
    ScalarField sdf;          ///< normalized to [0, 1]
    VelocityField boundary;   ///< zero outside B_xi
    int xi = 1;
    std::optional<double> q_inlet;

    /// Crops columns [offset, offset + width) out of the global raw SDF and
    /// velocity field, divides the SDF by `sdf_max` and keeps only the band
    /// velocities.
    static SolverInput from_global(const ScalarField& sdf_raw, const VelocityField& global, int offset,
                                   int width, int xi, std::optional<double> q_inlet,
                                   double sdf_max = kSdfMax);

    const PixelGrid& grid() const noexcept { return sdf.grid(); }
    ScalarField mask() const { return mask_from_sdf(sdf); }
};

/// raw * mask, then band pixels := v_boundary.
VelocityField postprocess(const VelocityField& raw, const ScalarField& mask,
                          const VelocityField& v_boundary, int xi);

/// Relative guard: columns with |q(i)| < kFlowRateGuard * q_inlet are left unscaled.
inline constexpr double kFlowRateGuard = 1.0e-6;

struct ConstraintResult {
    VelocityField field;
    std::vector<int> flagged_columns;  ///< columns skipped by the guard
};

/// Rescales vx column-wise so that every unflagged column carries q_inlet.
/// vy is returned unchanged. Throws Parameter unless q_inlet > 0.
ConstraintResult constraint_layer(const VelocityField& v, const ScalarField& mask, double q_inlet);

class SubdomainSolver {
public:
    virtual ~SubdomainSolver() = default;

    /// predict() followed by the shared post-processing above.
    VelocityField solve(const SolverInput& input) const;

    virtual std::string name() const = 0;
    bool flow_rate_constraint() const noexcept { return constrained_; }

protected:
    explicit SubdomainSolver(bool constrained = false) : constrained_(constrained) {}

    /// Raw backend output on input.grid(); must not depend on mutable state.
    virtual VelocityField predict(const SolverInput& input) const = 0;

private:
    bool constrained_;
};

}  // namespace flowdd::usds
