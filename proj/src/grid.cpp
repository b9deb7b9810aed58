#include "flowdd/grid.hpp"

#include "flowdd/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flowdd {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Parameter: return "parameter";
        case ErrorKind::Extent: return "extent";
        case ErrorKind::Invariant: return "invariant";
        case ErrorKind::Model: return "model";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Geometry: return "geometry";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
        case ErrorKind::Solver: return "solver";
    }
    return "unknown";
}

PixelGrid PixelGrid::make(int width, int height, double dy, long origin_x, double x_ref) {
    if (width < 1 || height < 1) {
        std::ostringstream os;
        os << "pixel grid must be at least 1x1, got " << width << "x" << height;
        fail(ErrorKind::Parameter, os.str());
    }
    if (!(dy > 0.0) || !std::isfinite(dy)) {
        fail(ErrorKind::Parameter, "pixel spacing dy must be positive and finite");
    }
    return PixelGrid{width, height, dy, origin_x, x_ref};
}

PixelGrid PixelGrid::crop(int offset, int w) const {
    if (offset < 0 || w < 1 || offset + w > width) {
        std::ostringstream os;
        os << "crop [" << offset << ", " << offset + w << ") outside grid of width " << width;
        fail(ErrorKind::Extent, os.str());
    }
    return PixelGrid{w, height, dy, origin_x + offset, x_ref};
}

ScalarField::ScalarField(const PixelGrid& grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const PixelGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        std::ostringstream os;
        os << "field has " << values_.size() << " values, grid expects " << grid_.size();
        fail(ErrorKind::Invariant, os.str());
    }
}

ScalarField ScalarField::crop(int offset, int w) const {
    ScalarField out(grid_.crop(offset, w));
    for (int j = 0; j < grid_.height; ++j) {
        const auto src = values_.begin() + static_cast<std::ptrdiff_t>(index(offset, j));
        std::copy(src, src + w, out.values_.begin() + static_cast<std::ptrdiff_t>(out.index(0, j)));
    }
    return out;
}

bool ScalarField::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

VelocityField::VelocityField(ScalarField vx_, ScalarField vy_) : vx(std::move(vx_)), vy(std::move(vy_)) {
    if (!(vx.grid() == vy.grid())) {
        fail(ErrorKind::Invariant, "velocity components must share one grid");
    }
}

void VelocityField::require_finite(const char* context) const {
    for (const ScalarField* comp : {&vx, &vy}) {
        for (int j = 0; j < comp->height(); ++j) {
            for (int i = 0; i < comp->width(); ++i) {
                if (!std::isfinite((*comp)(i, j))) {
                    std::ostringstream os;
                    os << context << ": non-finite " << (comp == &vx ? "vx" : "vy") << " at pixel ("
                       << i << ", " << j << ")";
                    fail(ErrorKind::Numeric, os.str());
                }
            }
        }
    }
}

BoundaryBand::BoundaryBand(int width, int xi) : width_(width), xi_(xi) {
    if (xi < 1 || 3 * xi >= width) {
        std::ostringstream os;
        os << "input boundary width xi=" << xi << " must satisfy 1 <= xi < W/3 for W=" << width;
        fail(ErrorKind::Parameter, os.str());
    }
}

std::vector<Pixel> boundary_band_pixels(const PixelGrid& grid, int xi) {
    const BoundaryBand band(grid.width, xi);
    std::vector<Pixel> pixels;
    pixels.reserve(static_cast<std::size_t>(2 * xi * grid.height));
    for (int i = 0; i < grid.width; ++i) {
        if (!band.contains_column(i)) {
            continue;
        }
        for (int j = 0; j < grid.height; ++j) {
            pixels.push_back({i, j});
        }
    }
    return pixels;
}

ScalarField mask_from_sdf(const ScalarField& sdf) {
    ScalarField mask(sdf.grid());
    auto in = sdf.values();
    auto out = mask.values();
    for (std::size_t k = 0; k < in.size(); ++k) {
        if (in[k] < 0.0 || std::isnan(in[k])) {
            fail(ErrorKind::Invariant, "SDF must be non-negative to build a mask");
        }
        out[k] = in[k] > 0.0 ? 1.0 : 0.0;
    }
    return mask;
}

std::vector<double> flow_rate_profile(const ScalarField& vx) {
    const int w = vx.width();
    const double dy = vx.grid().dy;
    std::vector<double> q(static_cast<std::size_t>(w), 0.0);
    for (int j = 0; j < vx.height(); ++j) {
        for (int i = 0; i < w; ++i) {
            q[static_cast<std::size_t>(i)] += vx(i, j);
        }
    }
    for (double& qi : q) {
        qi *= dy;
    }
    return q;
}

ScalarField parabolic_profile(double v_max, double d, const PixelGrid& grid) {
    if (!(d > 0.0)) {
        fail(ErrorKind::Parameter, "channel height d must be positive");
    }
    if (v_max < kMinInletVelocity || v_max > kMaxInletVelocity) {
        spdlog::warn("inlet peak velocity {} m/s outside the trained range [{}, {}]", v_max,
                     kMinInletVelocity, kMaxInletVelocity);
    }
    ScalarField vx(grid);
    for (int j = 0; j < grid.height; ++j) {
        const double y = grid.y_center(j);
        const double value = (y > 0.0 && y < d) ? 4.0 * v_max * y * (d - y) / (d * d) : 0.0;
        for (int i = 0; i < grid.width; ++i) {
            vx(i, j) = value;
        }
    }
    return vx;
}

double inlet_flow_rate(double v_max, double d) {
    return 2.0 / 3.0 * v_max * d;
}

double carreau_viscosity(const CarreauParams& p, double gamma_dot) {
    const double lg = p.lambda * gamma_dot;
    return p.eta_ref * (p.eta_inf + (p.eta_0 - p.eta_inf) * std::pow(1.0 + lg * lg, (p.n - 1.0) / 2.0));
}

}  // namespace flowdd
