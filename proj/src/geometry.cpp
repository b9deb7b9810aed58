#include "flowdd/geometry.hpp"

#include "flowdd/error.hpp"
#include "flowdd/field_io.hpp"
#include "flowdd/rng.hpp"
#include "flowdd/sdf.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace flowdd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Relative slack when comparing x against the geometry extent.
constexpr double kExtentSlack = 1.0e-12;

double bump(WallPhase phase, double t) {
    const double c = std::cos(t);
    return phase == WallPhase::Verbatim ? 1.0 + c : 1.0 - c;
}

double bump_slope(WallPhase phase, double t) {
    const double s = std::sin(t);
    return phase == WallPhase::Verbatim ? -s : s;
}

WallPoint segment_wall(const StenosisSegment& seg, double d, WallPhase phase, double x) {
    const double b = bump(phase, kTwoPi * (x - seg.x0) / seg.length);
    const double half = 0.5 * d;
    return {half * (0.5 * seg.f_lower) * b, half + half * (1.0 - 0.5 * seg.f_upper * b)};
}

WallPoint straight_wall(double d) { return {0.0, d}; }

// Segment covering x, or nullptr in the straight parts.
const StenosisSegment* find_segment(const ChannelGeometry& geom, double x) {
    if (geom.segments.empty() || x < geom.stenotic_begin() || x >= geom.stenotic_end()) {
        return nullptr;
    }
    auto it = std::upper_bound(geom.segments.begin(), geom.segments.end(), x,
                               [](double v, const StenosisSegment& s) { return v < s.x0; });
    if (it == geom.segments.begin()) {
        return nullptr;
    }
    return &*std::prev(it);
}

void check_extent(const ChannelGeometry& geom, double x) {
    const double len = geom.total_length();
    if (!(x >= -kExtentSlack * len && x <= len * (1.0 + kExtentSlack))) {
        fail(ErrorKind::Extent, fmt::format("x = {} m outside channel extent [0, {}]", x, len));
    }
}

void check_strength(double f, const char* which) {
    if (!(f >= kMinStrength && f <= kMaxStrength)) {
        fail(ErrorKind::Parameter, fmt::format("stenosis strength {} = {} outside [{}, {}]", which, f,
                                               kMinStrength, kMaxStrength));
    }
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

ChannelGeometry straight_channel(double d_artery) {
    ChannelGeometry geom;
    geom.d_artery = d_artery;
    return geom;
}

ChannelGeometry make_stenotic_channel(const std::vector<StenosisSegment>& segments, double d_artery,
                                      double L_inlet, double L_stenotic, double L_outlet) {
    if (!(d_artery > 0.0) || !(L_inlet >= 0.0) || !(L_stenotic > 0.0) || !(L_outlet >= 0.0)) {
        fail(ErrorKind::Parameter, "channel diameter and region lengths must be positive");
    }
    ChannelGeometry geom;
    geom.d_artery = d_artery;
    geom.L_inlet = L_inlet;
    geom.L_stenotic = L_stenotic;
    geom.L_outlet = L_outlet;

    double rel_total = 0.0;
    for (const auto& s : segments) {
        if (!(s.rel_length > 0.0)) {
            fail(ErrorKind::Parameter, "relative segment length must be positive");
        }
        check_strength(s.f_lower, "f_lower");
        check_strength(s.f_upper, "f_upper");
        rel_total += s.rel_length;
    }
    double x0 = L_inlet;
    for (const auto& s : segments) {
        StenosisSegment seg = s;
        seg.length = s.rel_length / rel_total * L_stenotic;
        seg.x0 = x0;
        x0 += seg.length;
        geom.segments.push_back(seg);
    }
    return geom;
}

WallPoint wall_functions(const ChannelGeometry& geom, double x) {
    check_extent(geom, x);
    if (const auto* seg = find_segment(geom, x)) {
        return segment_wall(*seg, geom.d_artery, geom.phase, x);
    }
    return straight_wall(geom.d_artery);
}

WallPoint wall_slopes(const ChannelGeometry& geom, double x) {
    check_extent(geom, x);
    const auto* seg = find_segment(geom, x);
    if (seg == nullptr) {
        return {0.0, 0.0};
    }
    const double k = kTwoPi / seg->length;
    const double db = bump_slope(geom.phase, k * (x - seg->x0)) * k;
    const double half = 0.5 * geom.d_artery;
    return {half * 0.5 * seg->f_lower * db, -half * 0.5 * seg->f_upper * db};
}

std::vector<WallJump> wall_jumps(const ChannelGeometry& geom) {
    std::vector<WallJump> jumps;
    const double d = geom.d_artery;
    for (std::size_t k = 0; k < geom.segments.size(); ++k) {
        const auto& seg = geom.segments[k];
        WallJump jump;
        jump.x = seg.x0;
        if (k == 0) {
            jump.left = straight_wall(d);
        } else {
            const auto& prev = geom.segments[k - 1];
            jump.left = segment_wall(prev, d, geom.phase, prev.x0 + prev.length);
        }
        jump.right = segment_wall(seg, d, geom.phase, seg.x0);
        jumps.push_back(jump);
    }
    if (!geom.segments.empty()) {
        const auto& last = geom.segments.back();
        jumps.push_back({geom.stenotic_end(),
                         segment_wall(last, d, geom.phase, last.x0 + last.length), straight_wall(d)});
    }
    return jumps;
}

ChannelGeometry random_geometry(std::uint64_t seed, std::optional<int> n_segment) {
    CounterRng rng(seed);
    const int n = n_segment ? *n_segment : rng.uniform_int(1, 3);
    if (n < 1 || n > 3) {
        fail(ErrorKind::Parameter, fmt::format("segment count {} outside {{1, 2, 3}}", n));
    }
    std::vector<StenosisSegment> segs(static_cast<std::size_t>(n));
    for (auto& s : segs) {
        s.rel_length = rng.uniform(kMinRelLength, kMaxRelLength);
        s.f_lower = rng.uniform(kMinStrength, kMaxStrength);
        s.f_upper = rng.uniform(kMinStrength, kMaxStrength);
    }
    auto geom = make_stenotic_channel(segs);
    geom.rng_seed = seed;
    return geom;
}

ChannelGeometry scaled_geometry(const ChannelGeometry& base, int factor, ScaleMode mode) {
    if (factor != 2 && factor != 4 && factor != 8) {
        fail(ErrorKind::Parameter, fmt::format("scaling factor {} not in {{2, 4, 8}}", factor));
    }
    if (std::abs(base.L_stenotic - 1.0e-2) > 1.0e-12) {
        fail(ErrorKind::Parameter, "scaled geometries require the canonical 1 cm stenotic region");
    }
    if (base.segments.empty()) {
        fail(ErrorKind::Parameter, "scaled geometries require at least one stenotic segment");
    }

    ChannelGeometry out;
    if (mode == ScaleMode::Duplicate) {
        out = base;
        out.L_stenotic = factor * base.L_stenotic;
        out.segments.clear();
        for (int c = 0; c < factor; ++c) {
            for (auto seg : base.segments) {
                seg.x0 += c * base.L_stenotic;
                out.segments.push_back(seg);
            }
        }
        return out;
    }

    CounterRng rng = CounterRng(base.rng_seed).split(static_cast<std::uint64_t>(factor));
    const std::size_t count = base.segments.size() * static_cast<std::size_t>(factor);
    std::vector<StenosisSegment> segs(count);
    for (auto& s : segs) {
        s.rel_length = rng.uniform(kMinRelLength, kMaxRelLength);
        s.f_lower = rng.uniform(kMinStrength, kMaxStrength);
        s.f_upper = rng.uniform(kMinStrength, kMaxStrength);
    }
    out = make_stenotic_channel(segs, base.d_artery, base.L_inlet, factor * base.L_stenotic,
                                base.L_outlet);
    out.rng_seed = base.rng_seed;
    out.phase = base.phase;
    return out;
}

PixelGrid SamplingWindow::grid(double d_artery) const {
    const double dx = d_artery / height;
    return PixelGrid::make(width, height, dx, 0, x_start - 0.5 * dx);
}

SamplingWindow default_window(const ChannelGeometry& geom, int height) {
    SamplingWindow w;
    w.height = height;
    w.x_start = 4.0e-3;
    w.x_end = geom.total_length() - 2.0e-3;
    const double dx = geom.d_artery / height;
    w.width = static_cast<int>(std::lround((w.x_end - w.x_start) / dx)) + 1;
    return w;
}

Raster rasterize(const ChannelGeometry& geom, const SamplingWindow& window) {
    if (!(window.x_start < window.x_end) || window.width < 1 || window.height < 1) {
        fail(ErrorKind::Parameter, "sampling window must have x_start < x_end and a positive size");
    }
    const PixelGrid grid = window.grid(geom.d_artery);
    const double first = grid.x_center(0);
    const double last = grid.x_center(grid.width - 1);
    if (first < 0.0 || last > geom.total_length()) {
        fail(ErrorKind::Extent, fmt::format("window [{}, {}] leaves the channel [0, {}]", first, last,
                                            geom.total_length()));
    }
    Raster r;
    r.sdf = compute_sdf(geom, grid);
    r.mask = mask_from_sdf(r.sdf);
    return r;
}

int stenotic_start_column(const ChannelGeometry& geom, const SamplingWindow& window) {
    const double dx = geom.d_artery / window.height;
    return static_cast<int>(std::lround((geom.stenotic_begin() - window.x_start) / dx));
}

std::vector<int> extract_training_subdomains(int global_width, int stenotic_column, int sub_width) {
    constexpr int kPlain = 9;
    constexpr int kSets = 4;
    constexpr int kPerSet = 5;
    constexpr int kShift = 50;
    if (global_width < kPlain * sub_width) {
        fail(ErrorKind::Extent, fmt::format("global width {} cannot hold {} subdomains of width {}",
                                            global_width, kPlain, sub_width));
    }
    std::vector<int> offsets;
    offsets.reserve(kPlain + kSets * kPerSet);
    for (int k = 0; k < kPlain; ++k) {
        offsets.push_back(k * sub_width);
    }
    for (int set = 1; set <= kSets; ++set) {
        for (int m = 0; m < kPerSet; ++m) {
            const int off = stenotic_column + set * kShift + m * sub_width;
            if (off < 0 || off + sub_width > global_width) {
                fail(ErrorKind::Extent,
                     fmt::format("shifted subdomain at column {} leaves the global grid", off));
            }
            offsets.push_back(off);
        }
    }
    return offsets;
}

void write_geometry(const std::filesystem::path& path, const ChannelGeometry& geom) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    tree.put("channel.d_artery", fmt_double(geom.d_artery));
    tree.put("channel.L_inlet", fmt_double(geom.L_inlet));
    tree.put("channel.L_stenotic", fmt_double(geom.L_stenotic));
    tree.put("channel.L_outlet", fmt_double(geom.L_outlet));
    tree.put("channel.seed", geom.rng_seed);
    tree.put("channel.phase", geom.phase == WallPhase::Verbatim ? "verbatim" : "smooth");
    tree.put("channel.n_segment", geom.segments.size());
    for (std::size_t k = 0; k < geom.segments.size(); ++k) {
        const auto& s = geom.segments[k];
        const std::string sec = fmt::format("segment{}", k);
        tree.put(sec + ".rel_length", fmt_double(s.rel_length));
        tree.put(sec + ".f_lower", fmt_double(s.f_lower));
        tree.put(sec + ".f_upper", fmt_double(s.f_upper));
    }
    std::ostringstream os;
    pt::write_ini(os, tree);
    write_file_atomic(path, os.str());
}

ChannelGeometry read_geometry(const std::filesystem::path& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::Io, fmt::format("cannot read geometry {}: {}", path.string(), e.what()));
    }
    try {
        const auto n = tree.get<std::size_t>("channel.n_segment");
        std::vector<StenosisSegment> segs(n);
        for (std::size_t k = 0; k < n; ++k) {
            const std::string sec = fmt::format("segment{}", k);
            segs[k].rel_length = tree.get<double>(sec + ".rel_length");
            segs[k].f_lower = tree.get<double>(sec + ".f_lower");
            segs[k].f_upper = tree.get<double>(sec + ".f_upper");
        }
        const double d = tree.get<double>("channel.d_artery");
        const double li = tree.get<double>("channel.L_inlet");
        const double ls = tree.get<double>("channel.L_stenotic");
        const double lo = tree.get<double>("channel.L_outlet");
        ChannelGeometry geom = n == 0 ? straight_channel(d) : make_stenotic_channel(segs, d, li, ls, lo);
        geom.L_inlet = li;
        geom.L_stenotic = ls;
        geom.L_outlet = lo;
        geom.rng_seed = tree.get<std::uint64_t>("channel.seed", 0);
        const auto phase = tree.get<std::string>("channel.phase", "verbatim");
        if (phase != "verbatim" && phase != "smooth") {
            fail(ErrorKind::Config, fmt::format("unknown wall phase '{}' in {}", phase, path.string()));
        }
        geom.phase = phase == "verbatim" ? WallPhase::Verbatim : WallPhase::Smooth;
        return geom;
    } catch (const pt::ptree_error& e) {
        fail(ErrorKind::Config, fmt::format("malformed geometry file {}: {}", path.string(), e.what()));
    }
}

}  // namespace flowdd
