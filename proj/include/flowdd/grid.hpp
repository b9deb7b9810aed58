#pragma once

// Raster containers for SDF, mask and velocity fields, together with the
// pointwise formulas that operate on them (flow rate, inlet profile,
// Carreau viscosity, input boundary band).
//
// Conventions used throughout the library:
//   * value(i, j) addresses column i (streamwise, x) and row j (cross-stream, y)
//   * storage is row-major, row j = 0 is the lower wall side
//   * pixels are square (dx == dy) and sampled at their centers:
//       x(i) = x_ref + (origin_x + i + 1/2) * dy,   y(j) = (j + 1/2) * dy

#include <cstddef>
#include <span>
#include <vector>

namespace flowdd {

struct PixelGrid {
    int width = 0;
    int height = 0;
    double dy = 0.0;    ///< meters per pixel (square pixels, so also dx)
    long origin_x = 0;  ///< global column index of local column 0
    double x_ref = 0.0; ///< physical x of the left edge of global column 0

    /// Validated constructor; throws Parameter on W < 1, H < 1 or dy <= 0.
    static PixelGrid make(int width, int height, double dy, long origin_x = 0,
                          double x_ref = 0.0);

    double dx() const noexcept { return dy; }
    std::size_t size() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    double x_center(int i) const noexcept {
        return x_ref + (static_cast<double>(origin_x + i) + 0.5) * dy;
    }
    double y_center(int j) const noexcept { return (static_cast<double>(j) + 0.5) * dy; }

    /// Sub-grid of `w` columns starting at local column `offset`.
    PixelGrid crop(int offset, int w) const;

    bool same_shape(const PixelGrid& other) const noexcept {
        return width == other.width && height == other.height && dy == other.dy;
    }
    bool operator==(const PixelGrid&) const = default;
};

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const PixelGrid& grid, double fill = 0.0);
    ScalarField(const PixelGrid& grid, std::vector<double> values);

    const PixelGrid& grid() const noexcept { return grid_; }
    int width() const noexcept { return grid_.width; }
    int height() const noexcept { return grid_.height; }

    double& operator()(int i, int j) noexcept { return values_[index(i, j)]; }
    double operator()(int i, int j) const noexcept { return values_[index(i, j)]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    /// Copy of columns [offset, offset + w).
    ScalarField crop(int offset, int w) const;

    bool all_finite() const noexcept;

    bool operator==(const ScalarField&) const = default;

private:
    std::size_t index(int i, int j) const noexcept {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.width) +
               static_cast<std::size_t>(i);
    }

    PixelGrid grid_{};
    std::vector<double> values_;
};

struct VelocityField {
    ScalarField vx;
    ScalarField vy;

    VelocityField() = default;
    explicit VelocityField(const PixelGrid& grid) : vx(grid), vy(grid) {}
    /// Throws Invariant if the components live on different grids.
    VelocityField(ScalarField vx_, ScalarField vy_);

    const PixelGrid& grid() const noexcept { return vx.grid(); }
    VelocityField crop(int offset, int w) const { return {vx.crop(offset, w), vy.crop(offset, w)}; }

    /// Throws Numeric naming the first non-finite pixel.
    void require_finite(const char* context) const;

    bool operator==(const VelocityField&) const = default;
};

/// Input boundary band B_xi: the first and last xi columns of a grid.
class BoundaryBand {
public:
    /// Throws Parameter unless 1 <= xi and 3 * xi < width.
    BoundaryBand(int width, int xi);

    int xi() const noexcept { return xi_; }
    int width() const noexcept { return width_; }
    bool contains_column(int i) const noexcept { return i < xi_ || i >= width_ - xi_; }

private:
    int width_;
    int xi_;
};

struct Pixel {
    int i = 0;
    int j = 0;
    bool operator==(const Pixel&) const = default;
};

/// Explicit pixel set of B_xi, column-major within each band.
std::vector<Pixel> boundary_band_pixels(const PixelGrid& grid, int xi);

/// 1 where sdf > 0, 0 where sdf == 0. Negative input is an Invariant error.
ScalarField mask_from_sdf(const ScalarField& sdf);

/// Discrete flow rate q(i) = sum_j vx(i, j) * dy for every column.
std::vector<double> flow_rate_profile(const ScalarField& vx);

/// Developed inlet profile vx(y) = 4 v_max y (d - y) / d^2 sampled at row
/// centers (zero above d). vy is implicitly zero.
ScalarField parabolic_profile(double v_max, double d, const PixelGrid& grid);

/// Closed-form flow rate of the parabolic inlet profile, (2/3) v_max d.
double inlet_flow_rate(double v_max, double d);

struct CarreauParams {
    double eta_inf = 3.3707;   ///< relative infinite-shear viscosity
    double eta_0 = 230.6330;   ///< relative zero-shear viscosity
    double eta_ref = 0.0012;   ///< Pa s
    double n = 0.45;           ///< power-law index
    double lambda = -300.0;    ///< s, only lambda^2 matters
    double rho = 1000.0;       ///< kg / m^3

    /// Fitted blood parameters.
    static CarreauParams blood() { return {}; }
};

/// eta = eta_ref (eta_inf + (eta_0 - eta_inf) (1 + (lambda gamma_dot)^2)^((n-1)/2)), in Pa s.
double carreau_viscosity(const CarreauParams& params, double gamma_dot);

/// Sampling range of the inlet peak velocity seen during training, m/s.
inline constexpr double kMinInletVelocity = 0.02;
inline constexpr double kMaxInletVelocity = 0.6;

}  // namespace flowdd
