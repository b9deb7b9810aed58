#include "flowdd/field_io.hpp"

#include "flowdd/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace flowdd {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, fmt::format("cannot open {}", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            fail(ErrorKind::Io, fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
        }
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorKind::Io, fmt::format("cannot write {}", tmp.string()));
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            fail(ErrorKind::Io, fmt::format("short write to {}", tmp.string()));
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fail(ErrorKind::Io, fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
    }
}

fs::path meta_path(const fs::path& csv_path) {
    fs::path p = csv_path;
    p.replace_extension(".meta");
    return p;
}

void write_field_csv(const fs::path& path, const ScalarField& field, std::string_view units) {
    const auto& g = field.grid();
    fmt::memory_buffer buf;
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < g.width; ++i) {
            if (i > 0) {
                buf.push_back(',');
            }
            fmt::format_to(std::back_inserter(buf), "{}", field(i, j));
        }
        buf.push_back('\n');
    }
    write_file_atomic(path, std::string_view(buf.data(), buf.size()));

    const std::string meta =
        fmt::format("width = {}\nheight = {}\ndy = {:.17g}\norigin_x = {}\nx_ref = {:.17g}\nunits = {}\n",
                    g.width, g.height, g.dy, g.origin_x, g.x_ref, units);
    write_file_atomic(meta_path(path), meta);
}

ScalarField read_field_csv(const fs::path& path) {
    namespace pt = boost::property_tree;
    pt::ptree meta;
    const fs::path mpath = meta_path(path);
    try {
        pt::read_ini(mpath.string(), meta);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::Io, fmt::format("cannot read field metadata {}: {}", mpath.string(), e.what()));
    }
    PixelGrid grid;
    try {
        grid = PixelGrid::make(meta.get<int>("width"), meta.get<int>("height"), meta.get<double>("dy"),
                               meta.get<long>("origin_x", 0), meta.get<double>("x_ref", 0.0));
    } catch (const pt::ptree_error& e) {
        fail(ErrorKind::Io, fmt::format("malformed field metadata {}: {}", mpath.string(), e.what()));
    }

    const std::string text = read_file(path);
    std::vector<double> values;
    values.reserve(grid.size());
    int rows = 0;
    const char* p = text.data();
    const char* end = p + text.size();
    while (p < end) {
        const char* eol = std::find(p, end, '\n');
        if (eol == p) {
            p = eol + 1;
            continue;
        }
        int cols = 0;
        const char* q = p;
        while (q < eol) {
            double v = 0.0;
            auto [next, ec] = std::from_chars(q, eol, v);
            if (ec != std::errc()) {
                fail(ErrorKind::Io, fmt::format("{}: bad number on line {}", path.string(), rows + 1));
            }
            values.push_back(v);
            ++cols;
            q = next;
            if (q < eol && *q == ',') {
                ++q;
            } else if (q < eol && *q == '\r') {
                ++q;
            }
        }
        if (cols != grid.width) {
            fail(ErrorKind::Invariant, fmt::format("{}: line {} has {} values, metadata says {}",
                                                   path.string(), rows + 1, cols, grid.width));
        }
        ++rows;
        p = eol + (eol < end ? 1 : 0);
    }
    if (rows != grid.height) {
        fail(ErrorKind::Invariant,
             fmt::format("{}: {} rows, metadata says {}", path.string(), rows, grid.height));
    }
    return ScalarField(grid, std::move(values));
}

void write_velocity_csv(const fs::path& dir, std::string_view prefix, const VelocityField& v) {
    write_field_csv(dir / fmt::format("{}vx.csv", prefix), v.vx);
    write_field_csv(dir / fmt::format("{}vy.csv", prefix), v.vy);
}

VelocityField read_velocity_csv(const fs::path& dir, std::string_view prefix) {
    return VelocityField(read_field_csv(dir / fmt::format("{}vx.csv", prefix)),
                         read_field_csv(dir / fmt::format("{}vy.csv", prefix)));
}

}  // namespace flowdd
