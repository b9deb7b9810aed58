#include "flowdd/sdf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace flowdd {

namespace {

constexpr int kSamples = 48;
constexpr double kInvPhi = 0.6180339887498949;

struct WallSampler {
    const ChannelGeometry& geom;
    double px;
    double py;

    // Squared distance from (px, py) to the lower (which == 0) or upper wall point at x.
    double sq(double x, int which) const {
        const WallPoint w = wall_functions(geom, x);
        const double y = which == 0 ? w.y_lower : w.y_upper;
        const double dx = x - px;
        const double dy = y - py;
        return dx * dx + dy * dy;
    }

    double golden(double a, double b, int which) const {
        double c = b - kInvPhi * (b - a);
        double d = a + kInvPhi * (b - a);
        double fc = sq(c, which);
        double fd = sq(d, which);
        while (b - a > kSdfTolerance) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - kInvPhi * (b - a);
                fc = sq(c, which);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + kInvPhi * (b - a);
                fd = sq(d, which);
            }
        }
        return std::min(fc, fd);
    }
};

double segment_sq_distance(double px, double py, double x, double y0, double y1) {
    const double lo = std::min(y0, y1);
    const double hi = std::max(y0, y1);
    const double dy = py < lo ? lo - py : (py > hi ? py - hi : 0.0);
    const double dx = px - x;
    return dx * dx + dy * dy;
}

double distance_impl(const ChannelGeometry& geom, const std::vector<WallJump>& jumps, double px,
                     double py) {
    const WallPoint here = wall_functions(geom, px);
    if (py <= here.y_lower || py >= here.y_upper) {
        return 0.0;
    }
    const double r = std::min(py - here.y_lower, here.y_upper - py);
    double best = r * r;
    const double lo = std::max(0.0, px - r);
    const double hi = std::min(geom.total_length(), px + r);

    const WallSampler sampler{geom, px, py};
    std::array<std::array<double, kSamples>, 2> g{};
    const double step = (hi - lo) / (kSamples - 1);
    for (int k = 0; k < kSamples; ++k) {
        const double x = k == kSamples - 1 ? hi : lo + k * step;
        const WallPoint w = wall_functions(geom, x);
        const double dx = x - px;
        g[0][static_cast<std::size_t>(k)] = dx * dx + (w.y_lower - py) * (w.y_lower - py);
        g[1][static_cast<std::size_t>(k)] = dx * dx + (w.y_upper - py) * (w.y_upper - py);
    }
    for (int which = 0; which < 2; ++which) {
        const auto& gw = g[static_cast<std::size_t>(which)];
        for (int k = 0; k < kSamples; ++k) {
            const double v = gw[static_cast<std::size_t>(k)];
            best = std::min(best, v);
            const bool left_ok = k == 0 || v <= gw[static_cast<std::size_t>(k - 1)];
            const bool right_ok = k == kSamples - 1 || v <= gw[static_cast<std::size_t>(k + 1)];
            if (left_ok && right_ok) {
                const double a = std::max(lo, lo + (k - 1) * step);
                const double b = std::min(hi, lo + (k + 1) * step);
                if (b > a) {
                    best = std::min(best, sampler.golden(a, b, which));
                }
            }
        }
    }
    for (const auto& jump : jumps) {
        if (jump.x < lo || jump.x > hi) {
            continue;
        }
        best = std::min(best, segment_sq_distance(px, py, jump.x, jump.left.y_lower, jump.right.y_lower));
        best = std::min(best, segment_sq_distance(px, py, jump.x, jump.left.y_upper, jump.right.y_upper));
    }
    return std::sqrt(best);
}

}  // namespace

double wall_distance(const ChannelGeometry& geom, double x, double y) {
    return distance_impl(geom, wall_jumps(geom), x, y);
}

ScalarField compute_sdf(const ChannelGeometry& geom, const PixelGrid& grid) {
    const auto jumps = wall_jumps(geom);
    ScalarField sdf(grid);
    for (int i = 0; i < grid.width; ++i) {
        const double x = grid.x_center(i);
        for (int j = 0; j < grid.height; ++j) {
            sdf(i, j) = distance_impl(geom, jumps, x, grid.y_center(j));
        }
    }
    return sdf;
}

}  // namespace flowdd
