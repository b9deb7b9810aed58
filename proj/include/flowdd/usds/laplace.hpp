#pragma once

#include "flowdd/usds/solver.hpp"

#include <memory>
#include <optional>

namespace flowdd::usds {

/// Factorized 5-point operator on a W x H grid whose Dirichlet set is the
/// band columns i < xi, i >= W - xi and the rows j = 0, j = H - 1. Solves
/// -Laplace(u) = f for the remaining pixels; pixel spacing is grid.dy.
class LaplaceFdOperator {
public:
    LaplaceFdOperator(int width, int height, int xi);
    ~LaplaceFdOperator();
    LaplaceFdOperator(LaplaceFdOperator&&) noexcept;
    LaplaceFdOperator& operator=(LaplaceFdOperator&&) noexcept;

    /// `dirichlet` supplies the Dirichlet values (other pixels ignored).
    /// Throws Numeric if the scaled residual exceeds kLaplaceResidual.
    ScalarField solve(const ScalarField& dirichlet, const ScalarField* source = nullptr) const;

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int xi() const noexcept { return xi_; }

private:
    struct Factor;
    int width_;
    int height_;
    int xi_;
    std::unique_ptr<Factor> factor_;
};

inline constexpr double kLaplaceResidual = 1.0e-12;

/// One-shot convenience wrapper around LaplaceFdOperator.
ScalarField laplace_fd_solve(const ScalarField& dirichlet, int xi, const ScalarField* source = nullptr);

struct PoissonBenchmark {
    ScalarField dirichlet;  ///< exact on the outer ring, zero inside
    ScalarField source;
};

/// Smooth Poisson problem on a W x H grid with dy = 1 / H:
/// g = x y + cos(3 x) exp(-y) on the ring, f = sin(4 x) sin(pi y) inside.
PoissonBenchmark poisson_benchmark(int width, int height);

/// Exact subdomain solver for validating the Schwarz orchestrator on a
/// scalar Poisson problem. The unknown is carried in vx (vy is zero); band
/// columns come from the solver input, the top and bottom rows from the
/// global Dirichlet data.
class LaplaceHarnessSolver final : public SubdomainSolver {
public:
    LaplaceHarnessSolver(ScalarField global_dirichlet, std::optional<ScalarField> global_source,
                         int sub_width, int xi);

    std::string name() const override { return "laplace"; }

protected:
    VelocityField predict(const SolverInput& input) const override;

private:
    ScalarField dirichlet_;
    std::optional<ScalarField> source_;
    LaplaceFdOperator op_;
};

}  // namespace flowdd::usds
