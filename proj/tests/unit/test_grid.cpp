#include "flowdd/error.hpp"
#include "flowdd/grid.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace flowdd;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Config;
}

}  // namespace

TEST_CASE("pixel grid validation and centers") {
    CHECK(kind_of([] { PixelGrid::make(0, 4, 1.0); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { PixelGrid::make(4, 0, 1.0); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { PixelGrid::make(4, 4, 0.0); }) == ErrorKind::Parameter);
    CHECK(kind_of([] { PixelGrid::make(4, 4, std::numeric_limits<double>::infinity()); }) ==
          ErrorKind::Parameter);

    const auto g = PixelGrid::make(256, 128, 1e-3 / 128, 10, 0.5);
    CHECK(g.dx() == g.dy);
    CHECK(g.size() == 256u * 128u);
    CHECK(g.x_center(0) == doctest::Approx(0.5 + 10.5 * g.dy).epsilon(1e-15));
    CHECK(g.y_center(127) == doctest::Approx(1e-3 - 0.5 * g.dy).epsilon(1e-15));

    const auto c = g.crop(20, 30);
    CHECK(c.width == 30);
    CHECK(c.origin_x == 30);
    CHECK(c.x_center(0) == g.x_center(20));
    CHECK(kind_of([&] { (void)g.crop(240, 30); }) == ErrorKind::Extent);
    CHECK(kind_of([&] { (void)g.crop(-1, 3); }) == ErrorKind::Extent);
}

TEST_CASE("scalar field layout and crop") {
    const auto g = PixelGrid::make(5, 3, 0.1);
    ScalarField f(g);
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 5; ++i) f(i, j) = 10 * j + i;
    }
    CHECK(f.values()[7] == 12.0);  // row-major: row 1, column 2
    const auto c = f.crop(2, 2);
    CHECK(c(0, 2) == 22.0);
    CHECK(c(1, 0) == 3.0);
    CHECK(c.grid().origin_x == 2);
    CHECK(kind_of([&] { ScalarField bad(g, std::vector<double>(4)); }) == ErrorKind::Invariant);
    CHECK(f.all_finite());
    f(1, 1) = std::nan("");
    CHECK_FALSE(f.all_finite());
}

TEST_CASE("velocity field invariants") {
    const auto g = PixelGrid::make(4, 4, 0.1);
    const auto h = PixelGrid::make(4, 5, 0.1);
    CHECK(kind_of([&] { VelocityField v{ScalarField(g), ScalarField(h)}; }) == ErrorKind::Invariant);
    VelocityField v(g);
    CHECK_NOTHROW(v.require_finite("test"));
    v.vy(2, 3) = std::numeric_limits<double>::infinity();
    CHECK(kind_of([&] { v.require_finite("test"); }) == ErrorKind::Numeric);
}

TEST_CASE("boundary band") {
    const auto g = PixelGrid::make(256, 128, 1.0);
    const auto one = boundary_band_pixels(g, 1);
    CHECK(one.size() == 2u * 128u);
    for (const auto& p : one) CHECK((p.i == 0 || p.i == 255));
    for (int xi : {1, 2, 10, 40, 85}) {
        const auto px = boundary_band_pixels(g, xi);
        CHECK(px.size() == static_cast<std::size_t>(2 * xi * 128));
        BoundaryBand band(256, xi);
        for (const auto& p : px) CHECK(band.contains_column(p.i));
        CHECK_FALSE(band.contains_column(xi));
        CHECK_FALSE(band.contains_column(255 - xi));
    }
    CHECK(kind_of([&] { (void)boundary_band_pixels(g, 86); }) == ErrorKind::Parameter);
    CHECK(kind_of([&] { BoundaryBand(256, 0); }) == ErrorKind::Parameter);
}

TEST_CASE("mask from sdf") {
    const auto g = PixelGrid::make(3, 2, 1.0);
    const auto zero_mask = mask_from_sdf(ScalarField(g));
    for (double m : zero_mask.values()) CHECK(m == 0.0);

    ScalarField sdf(g, std::vector<double>{0.0, 3.9e-6, 1.0, 0.0, 2.0, 5e-4});
    const auto m = mask_from_sdf(sdf);
    const std::vector<double> expected{0, 1, 1, 0, 1, 1};
    for (std::size_t k = 0; k < expected.size(); ++k) CHECK(m.values()[k] == expected[k]);

    // idempotent on scaled 0/1 fields
    ScalarField scaled = m;
    for (double& x : scaled.values()) x *= 1e-9;
    CHECK(mask_from_sdf(scaled) == m);

    sdf(0, 0) = -1e-12;
    CHECK(kind_of([&] { (void)mask_from_sdf(sdf); }) == ErrorKind::Invariant);
    sdf(0, 0) = std::nan("");
    CHECK(kind_of([&] { (void)mask_from_sdf(sdf); }) == ErrorKind::Invariant);
}

TEST_CASE("flow rate profile") {
    const double d = 1e-3;
    const auto g = PixelGrid::make(7, 128, d / 128);
    for (double q : flow_rate_profile(ScalarField(g, 1.0))) CHECK(q == doctest::Approx(1e-3).epsilon(1e-14));
    for (double q : flow_rate_profile(ScalarField(g, 0.0))) CHECK(q == 0.0);

    ScalarField f(g);
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < g.width; ++i) f(i, j) = std::sin(0.1 * i + 0.03 * j);
    }
    ScalarField f3 = f;
    for (double& x : f3.values()) x *= -2.5;
    const auto q = flow_rate_profile(f);
    const auto q3 = flow_rate_profile(f3);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(q3[i] == doctest::Approx(-2.5 * q[i]).epsilon(1e-13));
}

TEST_CASE("parabolic inlet profile") {
    const double d = 1e-3;
    const auto g8 = PixelGrid::make(1, 8, d / 8);
    const auto p8 = parabolic_profile(0.03, d, g8);
    for (int j = 0; j < 8; ++j) {
        const double y = g8.y_center(j);
        CHECK(p8(0, j) == doctest::Approx(4 * 0.03 * y * (d - y) / (d * d)).epsilon(1e-15));
    }

    // centers at d/4, 3d/4 and 5d/4 (outside the channel)
    const auto g3 = PixelGrid::make(1, 3, d / 2);
    const auto p3 = parabolic_profile(0.03, d, g3);
    CHECK(p3(0, 0) == doctest::Approx(0.0225).epsilon(1e-14));
    CHECK(p3(0, 1) == doctest::Approx(0.0225).epsilon(1e-14));
    CHECK(p3(0, 2) == 0.0);

    const auto mid = PixelGrid::make(1, 1, d);
    CHECK(parabolic_profile(0.3, d, mid)(0, 0) == doctest::Approx(0.3).epsilon(1e-15));

    // no-slip: the profile vanishes as the wall is approached
    const auto fine = PixelGrid::make(1, 4096, d / 4096);
    const auto pf = parabolic_profile(0.3, d, fine);
    CHECK(pf(0, 0) < 3e-4);
    CHECK(pf(0, 4095) < 3e-4);

    CHECK(kind_of([&] { (void)parabolic_profile(0.3, 0.0, g8); }) == ErrorKind::Parameter);
}

TEST_CASE("parabolic flow rate converges at second order") {
    // Midpoint sums of a parabola overshoot by exactly 1 / (2 H^2).
    const double d = 1e-3;
    const double v = 0.3;
    const double exact = inlet_flow_rate(v, d);
    double prev_err = 0.0;
    for (int h : {16, 32, 64, 128, 256}) {
        const auto g = PixelGrid::make(1, h, d / h);
        const double q = flow_rate_profile(parabolic_profile(v, d, g))[0];
        const double rel = (q - exact) / exact;
        CHECK(rel == doctest::Approx(1.0 / (2.0 * h * h)).epsilon(1e-9));
        if (prev_err > 0.0) CHECK(prev_err / rel == doctest::Approx(4.0).epsilon(1e-9));
        prev_err = rel;
    }
}

TEST_CASE("inlet flow rate") {
    CHECK(inlet_flow_rate(0.3, 1e-3) == doctest::Approx(2.0e-4).epsilon(1e-15));
    CHECK(inlet_flow_rate(0.0, 1e-3) == 0.0);
    CHECK(inlet_flow_rate(0.6, 1e-3) == doctest::Approx(2 * inlet_flow_rate(0.3, 1e-3)).epsilon(1e-15));
    const double quad = test::simpson([](double y) { return 4 * 0.3 * y * (1e-3 - y) / 1e-6; }, 0.0, 1e-3, 64);
    CHECK(quad == doctest::Approx(inlet_flow_rate(0.3, 1e-3)).epsilon(1e-13));
}

TEST_CASE("carreau viscosity") {
    const auto p = CarreauParams::blood();
    CHECK(p.eta_inf == 3.3707);
    CHECK(p.eta_0 == 230.6330);
    CHECK(p.eta_ref == 0.0012);
    CHECK(p.n == 0.45);
    CHECK(std::abs(p.lambda) == 300.0);
    CHECK(p.rho == 1000.0);

    CHECK(carreau_viscosity(p, 0.0) == doctest::Approx(0.2767596).epsilon(1e-14));
    CHECK(carreau_viscosity(p, 1e15) == doctest::Approx(4.04484e-3).epsilon(1e-6));
    // mpmath, 30 digits: 0.0012 (3.3707 + 227.2623 * 2^-0.275)
    CHECK(carreau_viscosity(p, 1.0 / 300.0) == doctest::Approx(0.2294300401673494897894147).epsilon(1e-14));

    CarreauParams flipped = p;
    flipped.lambda = 300.0;
    CHECK(carreau_viscosity(flipped, 0.37) == carreau_viscosity(p, 0.37));

    double prev = carreau_viscosity(p, 0.0);
    for (double g = 1e-4; g < 1e6; g *= 1.7) {
        const double eta = carreau_viscosity(p, g);
        CHECK(eta < prev);
        CHECK(eta >= p.eta_ref * p.eta_inf);
        CHECK(eta <= p.eta_ref * p.eta_0);
        prev = eta;
    }
}
