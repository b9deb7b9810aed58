#include "flowdd/usds/laplace.hpp"

#include "flowdd/error.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flowdd::usds {

struct LaplaceFdOperator::Factor {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::SparseMatrix<double> matrix;
    int nx = 0;  // unknown columns
    int ny = 0;  // unknown rows
};

LaplaceFdOperator::LaplaceFdOperator(int width, int height, int xi)
    : width_(width), height_(height), xi_(xi), factor_(std::make_unique<Factor>()) {
    if (xi < 1 || width - 2 * xi < 1 || height < 3) {
        fail(ErrorKind::Parameter,
             fmt::format("Laplace operator needs interior pixels: W={} H={} xi={}", width, height, xi));
    }
    auto& f = *factor_;
    f.nx = width - 2 * xi;
    f.ny = height - 2;
    const int n = f.nx * f.ny;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(5 * n));
    auto id = [&](int a, int b) { return b * f.nx + a; };
    for (int b = 0; b < f.ny; ++b) {
        for (int a = 0; a < f.nx; ++a) {
            const int row = id(a, b);
            entries.emplace_back(row, row, 4.0);
            if (a > 0) entries.emplace_back(row, id(a - 1, b), -1.0);
            if (a + 1 < f.nx) entries.emplace_back(row, id(a + 1, b), -1.0);
            if (b > 0) entries.emplace_back(row, id(a, b - 1), -1.0);
            if (b + 1 < f.ny) entries.emplace_back(row, id(a, b + 1), -1.0);
        }
    }
    f.matrix.resize(n, n);
    f.matrix.setFromTriplets(entries.begin(), entries.end());
    f.ldlt.compute(f.matrix);
    if (f.ldlt.info() != Eigen::Success) {
        fail(ErrorKind::Numeric, "Laplace operator factorization failed");
    }
}

LaplaceFdOperator::~LaplaceFdOperator() = default;
LaplaceFdOperator::LaplaceFdOperator(LaplaceFdOperator&&) noexcept = default;
LaplaceFdOperator& LaplaceFdOperator::operator=(LaplaceFdOperator&&) noexcept = default;

ScalarField LaplaceFdOperator::solve(const ScalarField& dirichlet, const ScalarField* source) const {
    const auto& g = dirichlet.grid();
    if (g.width != width_ || g.height != height_) {
        fail(ErrorKind::Invariant, fmt::format("Laplace operator is {}x{}, data is {}x{}", width_, height_,
                                               g.width, g.height));
    }
    if (source != nullptr && !source->grid().same_shape(g)) {
        fail(ErrorKind::Invariant, "Laplace source and Dirichlet data differ in shape");
    }
    const auto& f = *factor_;
    const double h2 = g.dy * g.dy;
    Eigen::VectorXd rhs(f.nx * f.ny);
    double scale = 0.0;
    for (int b = 0; b < f.ny; ++b) {
        for (int a = 0; a < f.nx; ++a) {
            const int i = a + xi_;
            const int j = b + 1;
            double r = source != nullptr ? h2 * (*source)(i, j) : 0.0;
            if (a == 0) r += dirichlet(i - 1, j);
            if (a + 1 == f.nx) r += dirichlet(i + 1, j);
            if (b == 0) r += dirichlet(i, j - 1);
            if (b + 1 == f.ny) r += dirichlet(i, j + 1);
            rhs[b * f.nx + a] = r;
            scale = std::max(scale, std::abs(r));
        }
    }
    Eigen::VectorXd u = f.ldlt.solve(rhs);
    double residual = (f.matrix * u - rhs).lpNorm<Eigen::Infinity>();
    const double tol = kLaplaceResidual * std::max(scale, 1.0e-300);
    if (residual > tol) {
        // one step of iterative refinement
        u += f.ldlt.solve(rhs - f.matrix * u);
        residual = (f.matrix * u - rhs).lpNorm<Eigen::Infinity>();
    }
    if (!(residual <= tol)) {
        fail(ErrorKind::Numeric, fmt::format("Laplace solve residual {} above {}", residual, tol));
    }

    ScalarField out = dirichlet;
    for (int b = 0; b < f.ny; ++b) {
        for (int a = 0; a < f.nx; ++a) {
            out(a + xi_, b + 1) = u[b * f.nx + a];
        }
    }
    return out;
}

ScalarField laplace_fd_solve(const ScalarField& dirichlet, int xi, const ScalarField* source) {
    const LaplaceFdOperator op(dirichlet.width(), dirichlet.height(), xi);
    return op.solve(dirichlet, source);
}

LaplaceHarnessSolver::LaplaceHarnessSolver(ScalarField global_dirichlet, std::optional<ScalarField> global_source,
                                           int sub_width, int xi)
    : dirichlet_(std::move(global_dirichlet)),
      source_(std::move(global_source)),
      op_(sub_width, dirichlet_.height(), xi) {
    if (source_ && !source_->grid().same_shape(dirichlet_.grid())) {
        fail(ErrorKind::Invariant, "global source and Dirichlet data differ in shape");
    }
}

VelocityField LaplaceHarnessSolver::predict(const SolverInput& input) const {
    const auto& g = input.grid();
    const int offset = static_cast<int>(g.origin_x - dirichlet_.grid().origin_x);
    ScalarField data = dirichlet_.crop(offset, g.width);
    const int h = g.height;
    for (int j = 1; j + 1 < h; ++j) {
        for (int i = 0; i < g.width; ++i) {
            data(i, j) = input.boundary.vx(i, j);
        }
    }
    std::optional<ScalarField> src;
    if (source_) {
        src = source_->crop(offset, g.width);
    }
    ScalarField u = op_.solve(data, src ? &*src : nullptr);
    VelocityField out(g);
    out.vx = ScalarField(g, std::vector<double>(u.values().begin(), u.values().end()));
    return out;
}

}  // namespace flowdd::usds

namespace flowdd::usds {

PoissonBenchmark poisson_benchmark(int width, int height) {
    const auto grid = PixelGrid::make(width, height, 1.0 / height);
    PoissonBenchmark b{ScalarField(grid), ScalarField(grid)};
    for (int j = 0; j < height; ++j) {
        const double y = grid.y_center(j);
        for (int i = 0; i < width; ++i) {
            const double x = grid.x_center(i);
            if (i == 0 || j == 0 || i == width - 1 || j == height - 1) {
                b.dirichlet(i, j) = x * y + std::cos(3.0 * x) * std::exp(-y);
            } else {
                b.source(i, j) = std::sin(4.0 * x) * std::sin(std::numbers::pi * y);
            }
        }
    }
    return b;
}

}  // namespace flowdd::usds
