#pragma once

// Test-only oracles and stub subdomain solvers.

#include "flowdd/geometry.hpp"
#include "flowdd/grid.hpp"
#include "flowdd/rng.hpp"
#include "flowdd/schwarz.hpp"
#include "flowdd/usds/laplace.hpp"
#include "flowdd/usds/solver.hpp"
#include "flowdd/usds/stream.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace flowdd::test {

/// Dense Gaussian elimination with partial pivoting, A row-major n x n.
inline std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
        }
        if (p != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[p * n + k]);
            std::swap(b[c], b[p]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
        x[r] = s / a[r * n + r];
    }
    return x;
}

/// 5-point Dirichlet problem 4u - sum(neighbors) = dy^2 f on the interior
/// of a W x H grid, outer ring from `ring`. Assembled densely.
inline ScalarField dense_poisson(const ScalarField& ring, const ScalarField* source) {
    const auto& g = ring.grid();
    const int w = g.width - 2;
    const int h = g.height - 2;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    auto id = [&](int i, int j) { return static_cast<std::size_t>(j - 1) * w + (i - 1); };
    std::vector<double> a(n * n, 0.0);
    std::vector<double> b(n, 0.0);
    for (int j = 1; j <= h; ++j) {
        for (int i = 1; i <= w; ++i) {
            const auto r = id(i, j);
            a[r * n + r] = 4.0;
            b[r] = source ? g.dy * g.dy * (*source)(i, j) : 0.0;
            const int ni[4] = {i - 1, i + 1, i, i};
            const int nj[4] = {j, j, j - 1, j + 1};
            for (int k = 0; k < 4; ++k) {
                if (ni[k] == 0 || nj[k] == 0 || ni[k] == g.width - 1 || nj[k] == g.height - 1) {
                    b[r] += ring(ni[k], nj[k]);
                } else {
                    a[r * n + id(ni[k], nj[k])] = -1.0;
                }
            }
        }
    }
    const auto x = dense_solve(std::move(a), std::move(b));
    ScalarField u = ring;
    for (int j = 1; j <= h; ++j) {
        for (int i = 1; i <= w; ++i) u(i, j) = x[id(i, j)];
    }
    return u;
}

/// Same problem by matrix-free conjugate gradients, relative residual `tol`.
inline ScalarField cg_poisson(const ScalarField& ring, const ScalarField* source, double tol = 1e-15) {
    const auto& g = ring.grid();
    const int W = g.width;
    const int H = g.height;
    ScalarField u = ring;
    for (int j = 1; j < H - 1; ++j) {
        for (int i = 1; i < W - 1; ++i) u(i, j) = 0.0;
    }
    auto apply = [&](const ScalarField& x, ScalarField& y) {
        for (int j = 1; j < H - 1; ++j) {
            for (int i = 1; i < W - 1; ++i) {
                double s = 4.0 * x(i, j);
                if (i > 1) s -= x(i - 1, j);
                if (i < W - 2) s -= x(i + 1, j);
                if (j > 1) s -= x(i, j - 1);
                if (j < H - 2) s -= x(i, j + 1);
                y(i, j) = s;
            }
        }
    };
    ScalarField b(g), r(g), p(g), ap(g), x(g);
    for (int j = 1; j < H - 1; ++j) {
        for (int i = 1; i < W - 1; ++i) {
            double s = source ? g.dy * g.dy * (*source)(i, j) : 0.0;
            if (i == 1) s += ring(0, j);
            if (i == W - 2) s += ring(W - 1, j);
            if (j == 1) s += ring(i, 0);
            if (j == H - 2) s += ring(i, H - 1);
            b(i, j) = s;
        }
    }
    auto dot = [&](const ScalarField& a1, const ScalarField& a2) {
        double s = 0.0;
        for (int j = 1; j < H - 1; ++j) {
            for (int i = 1; i < W - 1; ++i) s += a1(i, j) * a2(i, j);
        }
        return s;
    };
    r = b;
    p = r;
    double rr = dot(r, r);
    const double stop = tol * tol * dot(b, b);
    for (int it = 0; it < 100000 && rr > stop; ++it) {
        apply(p, ap);
        const double alpha = rr / dot(p, ap);
        for (int j = 1; j < H - 1; ++j) {
            for (int i = 1; i < W - 1; ++i) {
                x(i, j) += alpha * p(i, j);
                r(i, j) -= alpha * ap(i, j);
            }
        }
        const double rr_new = dot(r, r);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (int j = 1; j < H - 1; ++j) {
            for (int i = 1; i < W - 1; ++i) p(i, j) = r(i, j) + beta * p(i, j);
        }
    }
    for (int j = 1; j < H - 1; ++j) {
        for (int i = 1; i < W - 1; ++i) u(i, j) = x(i, j);
    }
    return u;
}

/// Composite Simpson rule for f on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

/// Copies the last left-band column into every column; the band
/// overwrite then restores both bands.
class PropagationStub final : public usds::SubdomainSolver {
public:
    std::string name() const override { return "propagation-stub"; }

protected:
    VelocityField predict(const usds::SolverInput& in) const override {
        const auto& g = in.grid();
        VelocityField v(g);
        for (int j = 0; j < g.height; ++j) {
            for (int i = 0; i < g.width; ++i) {
                v.vx(i, j) = in.boundary.vx(in.xi - 1, j);
                v.vy(i, j) = in.boundary.vy(in.xi - 1, j);
            }
        }
        return v;
    }
};

/// Interior vy = 1.5 * mean band vy + c: amplifies whatever the bands carry.
class AmplifyingStub final : public usds::SubdomainSolver {
public:
    explicit AmplifyingStub(double c = 1e-3) : c_(c) {}
    std::string name() const override { return "amplifying-stub"; }

protected:
    VelocityField predict(const usds::SolverInput& in) const override {
        const auto& g = in.grid();
        double sum = 0.0;
        int n = 0;
        for (int j = 0; j < g.height; ++j) {
            for (int i = 0; i < g.width; ++i) {
                if (i < in.xi || i >= g.width - in.xi) {
                    sum += in.boundary.vy(i, j);
                    ++n;
                }
            }
        }
        VelocityField v(g);
        const double value = 1.5 * sum / n + c_;
        for (double& x : v.vy.values()) x = value;
        return v;
    }

private:
    double c_;
};

/// Returns base + floor(calls / per_iteration) * step in vx, so consecutive
/// iterates always differ by `step`.
class StagnatingStub final : public usds::SubdomainSolver {
public:
    StagnatingStub(int per_iteration, double step, double base = 0.1)
        : per_iteration_(per_iteration), step_(step), base_(base) {}
    std::string name() const override { return "stagnating-stub"; }

protected:
    VelocityField predict(const usds::SolverInput& in) const override {
        const long k = calls_++ / per_iteration_;
        VelocityField v(in.grid());
        for (double& x : v.vx.values()) x = base_ + static_cast<double>(k) * step_;
        return v;
    }

private:
    int per_iteration_;
    double step_;
    double base_;
    mutable std::atomic<long> calls_{0};
};

/// Returns the truth field crop at the subdomain position.
class TruthStub final : public usds::SubdomainSolver {
public:
    explicit TruthStub(VelocityField truth) : truth_(std::move(truth)) {}
    std::string name() const override { return "truth-stub"; }

protected:
    VelocityField predict(const usds::SolverInput& in) const override {
        return truth_.crop(static_cast<int>(in.grid().origin_x - truth_.grid().origin_x), in.grid().width);
    }

private:
    VelocityField truth_;
};

/// Smooth Poisson problem on 511 x 64 embedded in a 512-column global grid
/// and split into 3 subdomains of width 181 with overlap 16; the last
/// global column stays uncovered.
struct PoissonSplit {
    schwarz::SubdomainLayout layout;
    schwarz::SchwarzProblem problem;
    ScalarField dirichlet;  ///< 512 columns
    ScalarField source;     ///< 512 columns
    ScalarField oracle;     ///< CG solution on the 511 covered columns
    schwarz::BoundaryProfiles profiles;
};

inline PoissonSplit poisson_split(int delta = 16) {
    constexpr int kW = 512, kH = 64;
    const auto bench = usds::poisson_benchmark(kW - 1, kH);
    const auto grid = PixelGrid::make(kW, kH, 1.0 / kH);
    PoissonSplit s;
    s.layout = schwarz::decompose(kW, (kW - 1 + 2 * delta) / 3, delta, 1);
    s.dirichlet = ScalarField(grid);
    s.source = ScalarField(grid);
    for (int j = 0; j < kH; ++j) {
        for (int i = 0; i < kW - 1; ++i) {
            s.dirichlet(i, j) = bench.dirichlet(i, j);
            s.source(i, j) = bench.source(i, j);
        }
    }
    s.problem.sdf = ScalarField(grid, 1.0);
    s.problem.sdf_max = 1.0;
    s.oracle = cg_poisson(bench.dirichlet, &bench.source);
    s.profiles = schwarz::BoundaryProfiles::from_field(VelocityField(s.dirichlet, ScalarField(grid)), s.layout);
    return s;
}

/// Random stenotic channel on the canonical window with the masked
/// stream-function field as ground truth, decomposed with W = 256. The mask
/// matters on vertical wall facets, where the SDF is zero but the analytic
/// field is not.
struct StreamCase {
    ChannelGeometry geom;
    schwarz::SubdomainLayout layout;
    schwarz::SchwarzProblem problem;
    VelocityField truth;
    schwarz::BoundaryProfiles profiles;
};

inline StreamCase stream_case(std::uint64_t seed, int xi = 1, int delta = 2, double v_max = 0.3) {
    StreamCase c;
    c.geom = random_geometry(seed);
    const auto window = default_window(c.geom);
    const auto grid = window.grid(c.geom.d_artery);
    c.layout = schwarz::decompose(grid.width, 256, delta, xi);
    c.problem.sdf = rasterize(c.geom, window).sdf;
    c.problem.q_inlet = inlet_flow_rate(v_max, c.geom.d_artery);
    c.truth = usds::stream_function_field(c.geom, grid, *c.problem.q_inlet);
    const auto mask = mask_from_sdf(c.problem.sdf);
    for (std::size_t k = 0; k < mask.values().size(); ++k) {
        c.truth.vx.values()[k] *= mask.values()[k];
        c.truth.vy.values()[k] *= mask.values()[k];
    }
    c.profiles = schwarz::BoundaryProfiles::from_field(c.truth, c.layout);
    return c;
}

/// Layout of n subdomains (W = 32, xi = 1, delta = 2) on an open 16-row
/// channel, inlet band 1 and outlet band 0. Runs the propagation stub and
/// returns the first iteration at which the last subdomain's interior
/// holds a nonzero value, or 0 if it never does.
inline int propagation_iteration(int n, int max_iterations = 50) {
    constexpr int kW = 32, kH = 16, kDelta = 2, kXi = 1;
    const int global = n * kW - (n - 1) * kDelta;
    const auto grid = PixelGrid::make(global, kH, 1.0 / kH);
    const auto layout = schwarz::decompose(global, kW, kDelta, kXi);
    schwarz::SchwarzProblem problem;
    problem.sdf = ScalarField(grid, 1.0);
    problem.sdf_max = 1.0;
    const auto band = PixelGrid::make(kXi, kH, 1.0 / kH);
    const schwarz::BoundaryProfiles profiles{VelocityField(ScalarField(band, 1.0), ScalarField(band)),
                                             VelocityField(band)};
    auto state = schwarz::initialize(layout, problem, schwarz::InitMode::None, profiles);
    const PropagationStub stub;
    const int last = layout.offsets.back();
    for (int k = 1; k <= max_iterations; ++k) {
        (void)schwarz::red_black_iterate(layout, stub, problem, state);
        for (int i = last + kDelta; i < last + kW - kXi; ++i) {
            for (int j = 0; j < kH; ++j) {
                if (state.field.vx(i, j) != 0.0) return k;
            }
        }
    }
    return 0;
}

/// Output hash of cnn_fixture.usds on cnn_fixture_input().
inline constexpr std::uint64_t kCnnFixtureHash = 0x8cc9030a2355a0c5ULL;

/// Input of the reference fixture: 3 x 16 x 32 with a 4-column band.
inline std::vector<float> cnn_fixture_input() {
    constexpr int C = 3, H = 16, W = 32, XI = 4;
    std::vector<float> x(static_cast<std::size_t>(C * H * W), 0.0f);
    auto at = [&](int c, int j, int i) -> float& { return x[static_cast<std::size_t>((c * H + j) * W + i)]; };
    for (int j = 0; j < H; ++j) {
        for (int i = 0; i < W; ++i) {
            at(0, j, i) = static_cast<float>(std::min(j + 0.5, H - j - 0.5) / (H / 2.0));
            if (i < XI || i >= W - XI) {
                const double s = (j + 0.5) / H;
                at(1, j, i) = static_cast<float>(0.3 * 4.0 * s * (1.0 - s));
                at(2, j, i) = static_cast<float>(1.0e-3 * ((i + j) % 7 - 3));
            }
        }
    }
    return x;
}

/// n subdomains on an open channel with zero boundary profiles.
struct OpenChannel {
    schwarz::SubdomainLayout layout;
    schwarz::SchwarzProblem problem;
    schwarz::BoundaryProfiles profiles;
};

inline OpenChannel open_channel(int n, int width = 32, int delta = 4, int xi = 2, int height = 12) {
    const int global = n * width - (n - 1) * delta;
    const auto grid = PixelGrid::make(global, height, 1.0 / height);
    OpenChannel c;
    c.layout = schwarz::decompose(global, width, delta, xi);
    c.problem.sdf = ScalarField(grid, 1.0);
    c.problem.sdf_max = 1.0;
    const auto band = PixelGrid::make(xi, height, 1.0 / height);
    c.profiles = {VelocityField(band), VelocityField(band)};
    return c;
}

inline std::filesystem::path fixture_path(const std::string& name) {
    return std::filesystem::path(FLOWDD_FIXTURE_DIR) / name;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("flowdd_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace flowdd::test
