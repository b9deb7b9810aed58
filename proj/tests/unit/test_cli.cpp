#include "flowdd/cli.hpp"
#include "flowdd/error.hpp"
#include "flowdd/field_io.hpp"
#include "flowdd/geometry.hpp"
#include "flowdd/usds/cnn.hpp"
#include "flowdd/usds/weights.hpp"

#include "../support.hpp"
#include "check.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <doctest.h>
#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace flowdd;
using namespace flowdd::cli;
namespace fs = std::filesystem;
using flowdd::test::kind_of;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "flowdd");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return main_entry(static_cast<int>(argv.size()), argv.data());
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_file(p)); }

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
    }
    std::sort(out.begin(), out.end());
    return out;
}

void check_same_tree(const fs::path& a, const fs::path& b) {
    const auto fa = sorted_files(a);
    REQUIRE(fa == sorted_files(b));
    for (const auto& f : fa) {
        INFO(f.string());
        CHECK(read_file(a / f) == read_file(b / f));
    }
}

}  // namespace

TEST_CASE("run configuration defaults and round trip") {
    const RunConfig d;
    CHECK(d.epsilon == 1e-5);
    CHECK(d.max_iterations == 200);
    CHECK(d.init_mode == schwarz::InitMode::Parabolic);
    CHECK(d.delta_or_default() == 2);
    CHECK(d.v_max_inlet == 0.3);

    RunConfig c;
    c.geometry_file = "geoms/geom_00001.ini";
    c.seed = 42;
    c.height = 64;
    c.sub_width = 128;
    c.xi = 10;
    c.delta = 24;
    c.epsilon = 3.5e-6;
    c.max_iterations = 77;
    c.init_mode = schwarz::InitMode::None;
    c.threads = 3;
    c.backend = Backend::Cnn;
    c.weights = "w.usds";
    c.constrained = true;
    c.v_max_inlet = 0.125;
    c.reference = "ref";
    c.out = "outdir";
    c.timing = false;
    const auto dir = test::scratch_dir("config");
    write_file_atomic(dir / "c.ini", run_config_ini(c));
    const auto r = load_run_config(dir / "c.ini");
    CHECK(r.geometry_file == c.geometry_file);
    CHECK(r.seed == 42);
    CHECK(r.height == 64);
    CHECK(r.sub_width == 128);
    CHECK(r.xi == 10);
    CHECK(r.delta == 24);
    CHECK(r.epsilon == c.epsilon);
    CHECK(r.max_iterations == 77);
    CHECK(r.init_mode == schwarz::InitMode::None);
    CHECK(r.threads == 3);
    CHECK(r.backend == Backend::Cnn);
    CHECK(r.weights == c.weights);
    CHECK(r.constrained);
    CHECK(r.v_max_inlet == 0.125);
    CHECK(r.reference == c.reference);
    CHECK(r.out == c.out);
    CHECK_FALSE(r.timing);
    CHECK(run_config_ini(r) == run_config_ini(c));

    SUBCASE("partial file keeps defaults") {
        write_file_atomic(dir / "p.ini", "[decomposition]\nxi = 10\n");
        const auto p = load_run_config(dir / "p.ini");
        CHECK(p.xi == 10);
        CHECK(p.delta_or_default() == 20);
        CHECK(p.epsilon == 1e-5);
    }
    SUBCASE("bad values") {
        write_file_atomic(dir / "b.ini", "[solver]\nbackend = gpu\n");
        CHECK(kind_of([&] { (void)load_run_config(dir / "b.ini"); }) == ErrorKind::Config);
        write_file_atomic(dir / "n.ini", "[schwarz]\nepsilon = fast\n");
        CHECK(kind_of([&] { (void)load_run_config(dir / "n.ini"); }) == ErrorKind::Config);
        RunConfig v;
        v.delta = 1;
        CHECK(kind_of([&] { v.validate(); }) == ErrorKind::Config);
        v = {};
        v.backend = Backend::Cnn;
        CHECK(kind_of([&] { v.validate(); }) == ErrorKind::Config);
    }
}

TEST_CASE("generate") {
    const auto dir = test::scratch_dir("generate");
    REQUIRE(run_cli({"generate", "--seed", "5", "--count", "12", "--descriptions-only", "--out", (dir / "a").string()}) ==
            kOk);
    REQUIRE(run_cli({"generate", "--seed", "5", "--count", "12", "--descriptions-only", "--out", (dir / "b").string()}) ==
            kOk);
    check_same_tree(dir / "a", dir / "b");
    std::set<std::string> distinct;
    for (int k = 0; k < 12; ++k) distinct.insert(read_file(dir / "a" / geometry_name(k)));
    CHECK(distinct.size() == 12);
    CHECK(geometry_name(42) == "geom_00042.ini");
    CHECK(read_geometry(dir / "a" / geometry_name(3)) == random_geometry(geometry_seed(5, 3)));

    SUBCASE("rasters") {
        REQUIRE(run_cli({"generate", "--seed", "5", "--count", "1", "--out", (dir / "r").string()}) == kOk);
        const auto sdf = read_field_csv(dir / "r" / "geom_00000_sdf.csv");
        const auto mask = read_field_csv(dir / "r" / "geom_00000_mask.csv");
        CHECK(sdf.width() == 2305);
        CHECK(sdf.height() == 128);
        CHECK(mask == mask_from_sdf(sdf));
    }
    SUBCASE("straight preset is open everywhere") {
        REQUIRE(run_cli({"generate", "--straight", "--count", "1", "--out", (dir / "s").string()}) == kOk);
        const auto mask = read_field_csv(dir / "s" / "geom_00000_mask.csv");
        for (double m : mask.values()) CHECK(m == 1.0);
    }
    SUBCASE("strength override") {
        REQUIRE(run_cli({"generate", "--count", "2", "--strength", "0.4", "--descriptions-only", "--out",
                     (dir / "f").string()}) == kOk);
        for (const auto& s : read_geometry(dir / "f" / geometry_name(1)).segments) {
            CHECK(s.f_lower == 0.4);
            CHECK(s.f_upper == 0.4);
        }
        CHECK(run_cli({"generate", "--strength", "0.9", "--out", (dir / "x").string()}) == kConfigError);
        CHECK(run_cli({"generate", "--strength", "0.01", "--out", (dir / "x").string()}) == kConfigError);
        GenerateOptions opt;
        opt.strength = 0.9;
        try {
            (void)cmd_generate(opt);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("[0.05, 0.7]") != std::string::npos);
        }
    }
}

TEST_CASE("synthesize") {
    const auto dir = test::scratch_dir("synthesize");
    REQUIRE(run_cli({"generate", "--seed", "9", "--count", "2", "--descriptions-only", "--out", (dir / "g").string()}) ==
            kOk);
    REQUIRE(run_cli({"synthesize", "--geometries", (dir / "g").string(), "--seed", "3", "--out", (dir / "d").string()}) ==
            kOk);
    for (int k = 0; k < 2; ++k) {
        const auto stem = fs::path(geometry_name(k)).stem();
        const auto geom = read_geometry(dir / "g" / geometry_name(k));
        int samples = 0;
        for (const auto& e : fs::directory_iterator(dir / "d" / stem)) samples += e.is_directory();
        CHECK(samples == 29);
        for (int p : {0, 8, 9, 28}) {
            const auto sdir = dir / "d" / stem / fmt::format("sample_{:02d}", p);
            boost::property_tree::ptree ini;
            boost::property_tree::read_ini((sdir / "sample.ini").string(), ini);
            const double v_max = ini.get<double>("v_max");
            const double q = ini.get<double>("q_inlet");
            CHECK(v_max >= 0.02);
            CHECK(v_max <= 0.6);
            CHECK(q == doctest::Approx(2.0 / 3.0 * v_max * geom.d_artery).epsilon(1e-15));

            const auto out = read_velocity_csv(sdir, "out_");
            const auto in = read_velocity_csv(sdir, "in_");
            CHECK(out.grid().width == 256);
            const auto profile = flow_rate_profile(out.vx);
            for (int i = 0; i < 256; ++i) {
                const auto w = wall_functions(geom, out.grid().x_center(i));
                const double cells = (w.y_upper - w.y_lower) / out.grid().dy;
                CHECK(std::abs(profile[static_cast<std::size_t>(i)] - q) / q <= 3.0 / (cells * cells));
                for (int j = 0; j < 128; ++j) {
                    const bool band = i == 0 || i == 255;
                    CHECK(in.vx(i, j) == (band ? out.vx(i, j) : 0.0));
                }
            }
            const auto sdf = read_field_csv(sdir / "sdf.csv");
            for (double s : sdf.values()) {
                CHECK(s >= 0.0);
                CHECK(s <= 1.0 + 1e-12);
            }
        }
    }
    CHECK(run_cli({"synthesize", "--geometries", (dir / "g").string(), "--v-max", "0.9", "--out",
               (dir / "e").string()}) == kConfigError);
    CHECK(run_cli({"synthesize", "--geometries", (dir / "missing").string(), "--out", (dir / "e").string()}) ==
          kIoError);
}

TEST_CASE("run with the stream backend") {
    const auto dir = test::scratch_dir("run_stream");
    const auto out = dir / "a";
    REQUIRE(run_cli({"run", "--seed", "17", "--no-timing", "--out", out.string()}) == kOk);
    const auto report = read_json(out / "report.json");
    CHECK(report["status"] == "Converged");
    CHECK(report["iterations"].get<int>() <= 2);
    CHECK(report["gre"].get<double>() == 0.0);
    CHECK(report["subdomains"] == 9);
    CHECK(report["covered_width"] == 2288);

    // Solver contract checked on the emitted field.
    const auto geom = random_geometry(17);
    const auto raster = rasterize(geom, default_window(geom));
    const auto v = read_velocity_csv(out, "");
    for (int j = 0; j < 128; ++j) {
        for (int i = 0; i < 2288; ++i) {
            if (raster.mask(i, j) == 0.0) {
                CHECK(v.vx(i, j) == 0.0);
                CHECK(v.vy(i, j) == 0.0);
            }
        }
    }
    const auto cfg = load_run_config(out / "config.ini");
    CHECK(cfg.seed == 17);
    CHECK(cfg.delta_or_default() == 2);

    SUBCASE("byte-identical rerun") {
        REQUIRE(run_cli({"run", "--seed", "17", "--no-timing", "--out", (dir / "b").string()}) == kOk);
        for (const char* f : {"trace.txt", "report.json", "vx.csv", "vy.csv"}) {
            CHECK(read_file(out / f) == read_file(dir / "b" / f));
        }
    }
    SUBCASE("config file with flag override") {
        RunConfig c;
        c.seed = 17;
        c.xi = 10;
        c.epsilon = 1e-4;
        c.out = (dir / "ignored").string();
        write_file_atomic(dir / "c.ini", run_config_ini(c));
        REQUIRE(run_cli({"run", "--config", (dir / "c.ini").string(), "--epsilon", "1e-6", "--out",
                     (dir / "c").string()}) == kOk);
        const auto used = load_run_config(dir / "c" / "config.ini");
        CHECK(used.xi == 10);
        CHECK(used.delta_or_default() == 20);
        CHECK(used.epsilon == 1e-6);
        CHECK(read_json(dir / "c" / "report.json")["subdomains"] == 9);
        CHECK_FALSE(fs::exists(dir / "ignored"));
    }
    SUBCASE("reference directory") {
        REQUIRE(run_cli({"run", "--seed", "17", "--reference", out.string(), "--init", "none", "--out",
                     (dir / "r").string()}) == kOk);
        CHECK(read_json(dir / "r" / "report.json")["gre"].get<double>() == 0.0);
    }
}

TEST_CASE("run with the laplace harness") {
    const auto dir = test::scratch_dir("run_laplace");
    REQUIRE(run_cli({"run", "--backend", "laplace", "--epsilon", "1e-9", "--out", dir.string()}) == kOk);
    const auto report = read_json(dir / "report.json");
    CHECK(report["status"] == "Converged");
    CHECK(report["subdomains"] == 2);
    CHECK(report["max_abs_diff_direct"].get<double>() <= 1e-6);
    CHECK(run_cli({"run", "--backend", "laplace", "--delta", "15", "--out", dir.string()}) == kConfigError);
}

TEST_CASE("run with a diverging network") {
    const auto dir = test::scratch_dir("run_cnn");
    using namespace flowdd::usds;
    std::vector<Layer> layers{
        {LayerSpec::conv(Branch::Shared, 3, 1, 1, 1, 0, false), {3e38f, 0.0f, 0.0f}, {0.0f}},
        {LayerSpec::conv(Branch::Vx, 1, 1, 1, 1, 0, false), {10.0f}, {0.0f}},
        {LayerSpec::conv(Branch::Vy, 1, 1, 1, 1, 0, false), {0.0f}, {0.0f}},
    };
    save_weights(CnnModel({3, 128, 256}, std::move(layers)), dir / "blowup.usds");
    CHECK(run_cli({"run", "--backend", "cnn", "--weights", (dir / "blowup.usds").string(), "--out",
               (dir / "o").string()}) == kDiverged);
    CHECK(read_json(dir / "o" / "report.json")["status"] == "Diverged");
    CHECK(read_json(dir / "o" / "report.json")["category"] == "diverged");

    SUBCASE("weights for another input size") {
        CHECK(run_cli({"run", "--backend", "cnn", "--weights", test::fixture_path("cnn_fixture.usds").string(), "--out",
                   (dir / "p").string()}) == kConfigError);
    }
    SUBCASE("missing weights") {
        CHECK(run_cli({"run", "--backend", "cnn", "--out", (dir / "p").string()}) == kConfigError);
        CHECK(run_cli({"run", "--backend", "cnn", "--weights", (dir / "absent.usds").string(), "--out",
                   (dir / "p").string()}) == kIoError);
    }
}

TEST_CASE("scalability") {
    const auto dir = test::scratch_dir("scalability");
    REQUIRE(run_cli({"scalability", "--seed", "4", "--factors", "2", "--no-timing", "--out", dir.string()}) == kOk);
    const auto table = read_json(dir / "scalability.json");
    REQUIRE(table.size() == 1);
    CHECK(table[0]["factor"] == 2);
    CHECK(table[0]["subdomains"] == 14);
    CHECK(table[0]["global_width"] == 3585);
    CHECK(table[0]["status"] == "Converged");
    CHECK(table[0]["gre"].get<double>() == 0.0);
    CHECK(table[0]["gre_star"].get<double>() == 0.0);
    const auto gre_lines = read_file(dir / "factor_2" / "gre.txt");
    CHECK_FALSE(gre_lines.empty());
    std::istringstream in(gre_lines);
    int k = 0;
    double g = 1.0;
    while (in >> k >> g) CHECK(g == 0.0);
    CHECK(read_file(dir / "scalability.txt").starts_with("factor N status"));
    CHECK(run_cli({"scalability", "--factors", "3", "--out", dir.string()}) == kConfigError);
}

TEST_CASE("evaluate") {
    const auto dir = test::scratch_dir("evaluate");
    const auto g = PixelGrid::make(10, 6, 1e-4);
    VelocityField ref(g), pred(g);
    for (int j = 0; j < 6; ++j) {
        for (int i = 0; i < 10; ++i) {
            ref.vx(i, j) = 0.1 * (i + 1);
            pred.vx(i, j) = ref.vx(i, j);
        }
    }
    write_velocity_csv(dir / "ref", "", ref);
    write_velocity_csv(dir / "pred", "", pred);
    REQUIRE(run_cli({"evaluate", "--reference", (dir / "ref").string(), "--prediction", (dir / "pred").string(), "--out",
                 (dir / "o").string()}) == kOk);
    CHECK(read_json(dir / "o" / "report.json")["gre"].get<double>() == 0.0);

    const double gres[] = {0.004, 0.03, 0.05, 0.5};
    std::vector<std::string> args{"evaluate", "--out", (dir / "h").string(), "--reports"};
    for (int k = 0; k < 4; ++k) {
        const auto p = dir / fmt::format("r{}.json", k);
        write_file_atomic(p, fmt::format("{{\"gre\": {}, \"diverged\": {}}}", gres[k], k == 3 ? "true" : "false"));
        args.push_back(p.string());
    }
    REQUIRE(run_cli(args) == kOk);
    const auto h = read_json(dir / "h" / "histogram.json");
    CHECK(h["total"] == 4);
    CHECK(h["bins"][0]["count"] == 1);
    CHECK(h["bins"][1]["count"] == 2);
    CHECK(h["bins"][4]["count"] == 0);
    CHECK(h["bins"][5]["count"] == 1);

    CHECK(run_cli({"evaluate", "--out", (dir / "x").string()}) == kConfigError);
    write_file_atomic(dir / "bad.json", "{\"nothing\": 1}");
    CHECK(run_cli({"evaluate", "--reports", (dir / "bad.json").string(), "--out", (dir / "x").string()}) == kIoError);
}

TEST_CASE("inspect-weights and exit codes") {
    CHECK(run_cli({"inspect-weights", test::fixture_path("cnn_fixture.usds").string()}) == kOk);
    const auto dir = test::scratch_dir("inspect");
    auto bytes = read_file(test::fixture_path("cnn_fixture.usds"));
    bytes[bytes.size() - 50] ^= 0x10;
    write_file_atomic(dir / "corrupt.usds", bytes);
    CHECK(run_cli({"inspect-weights", (dir / "corrupt.usds").string()}) == kIoError);
    CHECK(run_cli({"inspect-weights", (dir / "absent.usds").string()}) == kIoError);
    CHECK(run_cli({"frobnicate"}) == kConfigError);
    CHECK(run_cli({"run", "--init", "linear"}) == kConfigError);
    CHECK(run_cli({"run", "--config", (dir / "absent.ini").string()}) == kConfigError);
}
