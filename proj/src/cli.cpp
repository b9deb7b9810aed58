#include "flowdd/cli.hpp"

#include "flowdd/error.hpp"
#include "flowdd/field_io.hpp"
#include "flowdd/metrics.hpp"
#include "flowdd/rng.hpp"
#include "flowdd/usds/cnn.hpp"
#include "flowdd/usds/laplace.hpp"
#include "flowdd/usds/stream.hpp"
#include "flowdd/usds/weights.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <memory>

namespace flowdd::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using json = nlohmann::ordered_json;

const char* to_string(Backend b) {
    switch (b) {
        case Backend::Cnn: return "cnn";
        case Backend::Stream: return "stream";
        case Backend::Laplace: return "laplace";
    }
    return "?";
}

Backend parse_backend(const std::string& s) {
    if (s == "cnn") return Backend::Cnn;
    if (s == "stream") return Backend::Stream;
    if (s == "laplace") return Backend::Laplace;
    fail(ErrorKind::Config, fmt::format("unknown backend '{}' (cnn|stream|laplace)", s));
}

void RunConfig::validate() const {
    if (height < 8) fail(ErrorKind::Config, fmt::format("height {} too small", height));
    if (xi < 1 || 3 * xi >= sub_width) {
        fail(ErrorKind::Config, fmt::format("xi = {} needs 1 <= xi < sub_width / 3", xi));
    }
    const int d = delta_or_default();
    if (d < 2 * xi || d > sub_width - xi) {
        fail(ErrorKind::Config,
             fmt::format("delta = {} outside [2 xi, W - xi] = [{}, {}]", d, 2 * xi, sub_width - xi));
    }
    if (!(epsilon > 0.0)) fail(ErrorKind::Config, "epsilon must be positive");
    if (max_iterations < 1) fail(ErrorKind::Config, "max_iterations must be at least 1");
    if (threads < 1) fail(ErrorKind::Config, "threads must be at least 1");
    if (!(v_max_inlet > 0.0)) fail(ErrorKind::Config, "v_max_inlet must be positive");
    if (backend == Backend::Cnn && weights.empty()) fail(ErrorKind::Config, "backend cnn needs --weights");
    if (backend == Backend::Laplace && d % 2 != 0) {
        fail(ErrorKind::Config, "laplace harness needs an even delta");
    }
}

// Unlike ptree::get with a default, rejects values that fail to convert.
template <class T>
T lookup(const pt::ptree& tree, const std::string& key, T fallback) {
    if (auto child = tree.get_child_optional(key)) return child->get_value<T>();
    return fallback;
}

RunConfig load_run_config(const fs::path& path) {
    pt::ptree tree;
    try {
        pt::read_ini(path.string(), tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::Config, fmt::format("cannot read config {}: {}", path.string(), e.what()));
    }
    RunConfig c;
    try {
        if (auto f = tree.get_optional<std::string>("geometry.file"); f && !f->empty()) c.geometry_file = *f;
        c.seed = lookup<std::uint64_t>(tree, "geometry.seed", c.seed);
        c.height = lookup<int>(tree, "geometry.height", c.height);
        c.sub_width = lookup<int>(tree, "decomposition.sub_width", c.sub_width);
        c.xi = lookup<int>(tree, "decomposition.xi", c.xi);
        if (auto d = tree.get_child_optional("decomposition.delta")) c.delta = d->get_value<int>();
        c.epsilon = lookup<double>(tree, "schwarz.epsilon", c.epsilon);
        c.max_iterations = lookup<int>(tree, "schwarz.max_iterations", c.max_iterations);
        c.init_mode = schwarz::parse_init_mode(lookup<std::string>(tree, "schwarz.init", "parabolic"));
        c.threads = lookup<int>(tree, "schwarz.threads", c.threads);
        c.backend = parse_backend(lookup<std::string>(tree, "solver.backend", "stream"));
        c.weights = lookup<std::string>(tree, "solver.weights", "");
        c.constrained = lookup<bool>(tree, "solver.constrained", c.constrained);
        c.v_max_inlet = lookup<double>(tree, "flow.v_max_inlet", c.v_max_inlet);
        if (auto r = tree.get_optional<std::string>("flow.reference"); r && !r->empty()) c.reference = *r;
        c.out = lookup<std::string>(tree, "output.dir", c.out.string());
        c.timing = lookup<bool>(tree, "output.timing", c.timing);
    } catch (const pt::ptree_error& e) {
        fail(ErrorKind::Config, fmt::format("config {}: {}", path.string(), e.what()));
    }
    return c;
}

std::string run_config_ini(const RunConfig& c) {
    std::string s;
    s += fmt::format("[geometry]\nfile = {}\nseed = {}\nheight = {}\n\n",
                     c.geometry_file ? c.geometry_file->string() : "", c.seed, c.height);
    s += fmt::format("[decomposition]\nsub_width = {}\nxi = {}\ndelta = {}\n\n", c.sub_width, c.xi,
                     c.delta_or_default());
    s += fmt::format("[schwarz]\nepsilon = {:.17g}\nmax_iterations = {}\ninit = {}\nthreads = {}\n\n", c.epsilon,
                     c.max_iterations, schwarz::to_string(c.init_mode), c.threads);
    s += fmt::format("[solver]\nbackend = {}\nweights = {}\nconstrained = {}\n\n", to_string(c.backend),
                     c.weights.string(), c.constrained);
    s += fmt::format("[flow]\nv_max_inlet = {:.17g}\nreference = {}\n\n", c.v_max_inlet,
                     c.reference ? c.reference->string() : "");
    s += fmt::format("[output]\ndir = {}\ntiming = {}\n", c.out.string(), c.timing);
    return s;
}

std::string geometry_name(int k) { return fmt::format("geom_{:05d}.ini", k); }

std::uint64_t geometry_seed(std::uint64_t seed, int k) {
    return CounterRng(seed, static_cast<std::uint64_t>(k)).next_u64();
}

namespace {

void check_strength_override(double f) {
    if (!(f >= kMinStrength && f <= kMaxStrength)) {
        fail(ErrorKind::Parameter,
             fmt::format("strength override {} outside [{}, {}]", f, kMinStrength, kMaxStrength));
    }
}

std::vector<fs::path> geometry_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        fail(ErrorKind::Io, fmt::format("geometry directory {} not found", dir.string()));
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.starts_with("geom_") && e.path().extension() == ".ini") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        fail(ErrorKind::Io, fmt::format("no geom_*.ini files in {}", dir.string()));
    }
    return files;
}

ChannelGeometry load_geometry(const RunConfig& cfg) {
    return cfg.geometry_file ? read_geometry(*cfg.geometry_file) : random_geometry(cfg.seed);
}

std::string json_with(const metrics::GreReport& r, const json& extra) {
    json j = json::parse(metrics::report_json(r));
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j.dump(2) + "\n";
}

void strip_timing(schwarz::SchwarzTrace& trace, bool timing) {
    if (!timing) {
        for (auto& r : trace.history) r.wall_ms = 0.0;
    }
}

std::unique_ptr<usds::SubdomainSolver> make_flow_solver(const RunConfig& cfg, const ChannelGeometry& geom) {
    if (cfg.backend == Backend::Stream) {
        return std::make_unique<usds::StreamFunctionSolver>(geom, cfg.constrained);
    }
    if (cfg.backend == Backend::Cnn) {
        auto model = std::make_shared<const usds::CnnModel>(usds::load_weights(cfg.weights));
        const usds::TensorShape expected{3, static_cast<std::uint32_t>(cfg.height),
                                         static_cast<std::uint32_t>(cfg.sub_width)};
        if (!(model->input_shape() == expected)) {
            fail(ErrorKind::Config,
                 fmt::format("weights expect {}x{}x{} inputs, configuration gives 3x{}x{}",
                             model->input_shape().channels, model->input_shape().height,
                             model->input_shape().width, cfg.height, cfg.sub_width));
        }
        return std::make_unique<usds::CnnSolver>(std::move(model), cfg.constrained);
    }
    fail(ErrorKind::Config, "the laplace backend only runs the Poisson harness");
}

struct FlowCase {
    ChannelGeometry geom;
    Raster raster;
    double q = 0.0;
    VelocityField reference;
};

FlowCase flow_case(const ChannelGeometry& geom, const RunConfig& cfg, bool allow_reference) {
    const auto window = default_window(geom, cfg.height);
    FlowCase fc{geom, rasterize(geom, window), inlet_flow_rate(cfg.v_max_inlet, geom.d_artery), {}};
    if (allow_reference && cfg.reference) {
        fc.reference = read_velocity_csv(*cfg.reference, "");
        if (!fc.reference.grid().same_shape(fc.raster.sdf.grid())) {
            fail(ErrorKind::Config, "reference field does not match the sampling window");
        }
    } else {
        fc.reference = usds::stream_function_field(geom, fc.raster.sdf.grid(), fc.q);
    }
    return fc;
}

int run_laplace_harness(const RunConfig& cfg) {
    constexpr int kWidth = 512;
    constexpr int kHeight = 64;
    const int delta = cfg.delta.value_or(16);
    const int sub_width = (kWidth + delta) / 2;
    const auto bench = usds::poisson_benchmark(kWidth, kHeight);
    const auto grid = bench.dirichlet.grid();
    const VelocityField reference(usds::laplace_fd_solve(bench.dirichlet, 1, &bench.source), ScalarField(grid));

    const auto layout = schwarz::decompose(kWidth, sub_width, delta, cfg.xi);
    const schwarz::SchwarzProblem problem{ScalarField(grid, 1.0), 1.0, std::nullopt};
    const usds::LaplaceHarnessSolver solver(bench.dirichlet, bench.source, sub_width, cfg.xi);
    auto state = schwarz::initialize(layout, problem, schwarz::InitMode::None,
                                     schwarz::BoundaryProfiles::from_field(reference, layout));
    schwarz::SchwarzConfig sc;
    sc.epsilon = cfg.epsilon;
    sc.max_iterations = cfg.max_iterations;
    sc.threads = cfg.threads;
    auto trace = schwarz::run(layout, solver, problem, std::move(state), sc);
    strip_timing(trace, cfg.timing);

    double max_diff = 0.0;
    for (int j = 0; j < kHeight; ++j) {
        for (int i = 0; i < layout.covered_width(); ++i) {
            max_diff = std::max(max_diff, std::abs(trace.field.vx(i, j) - reference.vx(i, j)));
        }
    }
    auto report = metrics::gre(reference, trace.field, ScalarField(grid, 1.0), layout.covered_width());
    report.iterations = trace.iterations;
    report.diverged = trace.status == schwarz::Status::Diverged;

    schwarz::write_trace(cfg.out / "trace.txt", trace);
    write_velocity_csv(cfg.out, "", trace.field);
    write_file_atomic(cfg.out / "report.json",
                      json_with(report, {{"status", schwarz::to_string(trace.status)},
                                         {"backend", "laplace"},
                                         {"subdomains", layout.count()},
                                         {"max_abs_diff_direct", max_diff}}));
    fmt::print("laplace harness: {} after {} iterations, max |u - u_direct| = {:.3e}\n",
               schwarz::to_string(trace.status), trace.iterations, max_diff);
    return report.diverged ? kDiverged : kOk;
}

}  // namespace

int cmd_generate(const GenerateOptions& opt) {
    if (opt.count < 1) fail(ErrorKind::Config, "count must be at least 1");
    if (opt.strength) check_strength_override(*opt.strength);
    for (int k = 0; k < opt.count; ++k) {
        ChannelGeometry geom;
        if (opt.straight) {
            geom = straight_channel();
        } else {
            geom = random_geometry(geometry_seed(opt.seed, k));
            if (opt.strength) {
                auto segs = geom.segments;
                for (auto& s : segs) s.f_lower = s.f_upper = *opt.strength;
                const auto seed = geom.rng_seed;
                geom = make_stenotic_channel(segs, geom.d_artery, geom.L_inlet, geom.L_stenotic, geom.L_outlet);
                geom.rng_seed = seed;
            }
        }
        const fs::path desc = opt.out / geometry_name(k);
        write_geometry(desc, geom);
        if (!opt.descriptions_only) {
            const auto raster = rasterize(geom, default_window(geom, opt.height));
            const auto stem = desc.stem().string();
            write_field_csv(opt.out / (stem + "_sdf.csv"), raster.sdf, "m");
            write_field_csv(opt.out / (stem + "_mask.csv"), raster.mask, "1");
        }
    }
    fmt::print("wrote {} geometries to {}\n", opt.count, opt.out.string());
    return kOk;
}

int cmd_synthesize(const SynthesizeOptions& opt) {
    if (!(kMinInletVelocity <= opt.v_min && opt.v_min <= opt.v_max && opt.v_max <= kMaxInletVelocity)) {
        fail(ErrorKind::Config, fmt::format("v_max range [{}, {}] must lie within [{}, {}]", opt.v_min, opt.v_max,
                                            kMinInletVelocity, kMaxInletVelocity));
    }
    const auto files = geometry_files(opt.geometries);
    int pairs = 0;
    for (std::size_t k = 0; k < files.size(); ++k) {
        const auto geom = read_geometry(files[k]);
        const auto window = default_window(geom, opt.height);
        const auto raster = rasterize(geom, window);
        CounterRng rng(opt.seed, k);
        const double v_max = rng.uniform(opt.v_min, opt.v_max);
        const double q = inlet_flow_rate(v_max, geom.d_artery);
        const auto field = usds::stream_function_field(geom, raster.sdf.grid(), q);
        const auto offsets = extract_training_subdomains(raster.sdf.width(), stenotic_start_column(geom, window),
                                                         opt.sub_width);
        const fs::path gdir = opt.out / files[k].stem();
        for (std::size_t p = 0; p < offsets.size(); ++p) {
            const fs::path dir = gdir / fmt::format("sample_{:02d}", p);
            const auto input =
                usds::SolverInput::from_global(raster.sdf, field, offsets[p], opt.sub_width, opt.xi, q);
            write_field_csv(dir / "sdf.csv", input.sdf, "1");
            write_velocity_csv(dir, "in_", input.boundary);
            write_velocity_csv(dir, "out_", field.crop(offsets[p], opt.sub_width));
            write_file_atomic(dir / "sample.ini",
                              fmt::format("geometry = {}\noffset = {}\nxi = {}\nv_max = {:.17g}\nq_inlet = {:.17g}\n",
                                          files[k].filename().string(), offsets[p], opt.xi, v_max, q));
            ++pairs;
        }
    }
    fmt::print("wrote {} subdomain pairs for {} geometries to {}\n", pairs, files.size(), opt.out.string());
    return kOk;
}

int cmd_run(const RunConfig& cfg) {
    cfg.validate();
    write_file_atomic(cfg.out / "config.ini", run_config_ini(cfg));
    if (cfg.backend == Backend::Laplace) {
        return run_laplace_harness(cfg);
    }
    const auto geom = load_geometry(cfg);
    const auto fc = flow_case(geom, cfg, true);
    const auto layout =
        schwarz::decompose(fc.raster.sdf.width(), cfg.sub_width, cfg.delta_or_default(), cfg.xi);
    const schwarz::SchwarzProblem problem{fc.raster.sdf, kSdfMax, fc.q};
    const auto solver = make_flow_solver(cfg, geom);
    auto state = schwarz::initialize(layout, problem, cfg.init_mode,
                                     schwarz::BoundaryProfiles::from_field(fc.reference, layout));
    schwarz::SchwarzConfig sc;
    sc.epsilon = cfg.epsilon;
    sc.max_iterations = cfg.max_iterations;
    sc.init_mode = cfg.init_mode;
    sc.threads = cfg.threads;
    auto trace = schwarz::run(layout, *solver, problem, std::move(state), sc);
    strip_timing(trace, cfg.timing);

    auto report = metrics::gre(fc.reference, trace.field, fc.raster.mask, layout.covered_width());
    report.iterations = trace.iterations;
    report.v_max_inlet = cfg.v_max_inlet;
    report.diverged = trace.status == schwarz::Status::Diverged;

    schwarz::write_trace(cfg.out / "trace.txt", trace);
    write_velocity_csv(cfg.out, "", trace.field);
    write_file_atomic(cfg.out / "report.json",
                      json_with(report, {{"status", schwarz::to_string(trace.status)},
                                         {"backend", solver->name()},
                                         {"subdomains", layout.count()},
                                         {"covered_width", layout.covered_width()}}));
    fmt::print("{}: {} after {} iterations, N = {}, GRE = {:.6e}\n", solver->name(),
               schwarz::to_string(trace.status), trace.iterations, layout.count(), report.gre);
    return report.diverged ? kDiverged : kOk;
}

int cmd_scalability(const ScalabilityOptions& opt) {
    RunConfig cfg = opt.run;
    cfg.validate();
    if (cfg.backend == Backend::Laplace) {
        fail(ErrorKind::Config, "scalability needs the cnn or stream backend");
    }
    write_file_atomic(cfg.out / "config.ini", run_config_ini(cfg));
    const auto base = load_geometry(cfg);
    const auto mode = opt.mode;
    json table = json::array();
    std::string text = "factor N status iterations gre gre_star\n";
    for (int factor : opt.factors) {
        const auto geom = scaled_geometry(base, factor, mode);
        const auto fc = flow_case(geom, cfg, false);
        const auto layout =
            schwarz::decompose(fc.raster.sdf.width(), cfg.sub_width, cfg.delta_or_default(), cfg.xi);
        const schwarz::SchwarzProblem problem{fc.raster.sdf, kSdfMax, fc.q};
        const auto solver = make_flow_solver(cfg, geom);
        auto state = schwarz::initialize(layout, problem, schwarz::InitMode::None,
                                         schwarz::BoundaryProfiles::from_field(fc.reference, layout));
        schwarz::SchwarzConfig sc;
        sc.epsilon = cfg.epsilon;
        sc.max_iterations = cfg.max_iterations;
        sc.init_mode = schwarz::InitMode::None;
        sc.threads = cfg.threads;
        std::string gre_lines;
        const auto observer = [&](int k, const VelocityField& v) {
            const auto r = metrics::gre(fc.reference, v, fc.raster.mask, layout.covered_width());
            gre_lines += fmt::format("{} {:.17g}\n", k, r.gre);
        };
        auto trace = schwarz::run(layout, *solver, problem, std::move(state), sc, observer);
        strip_timing(trace, cfg.timing);
        const auto final_gre = metrics::gre(fc.reference, trace.field, fc.raster.mask, layout.covered_width());
        const auto star = schwarz::gre_star(layout, *solver, problem, fc.reference, cfg.threads);

        const fs::path dir = cfg.out / fmt::format("factor_{}", factor);
        schwarz::write_trace(dir / "trace.txt", trace);
        write_file_atomic(dir / "gre.txt", gre_lines);
        text += fmt::format("{} {} {} {} {:.6e} {:.6e}\n", factor, layout.count(), schwarz::to_string(trace.status),
                            trace.iterations, final_gre.gre, star.gre);
        table.push_back({{"factor", factor},
                         {"subdomains", layout.count()},
                         {"global_width", fc.raster.sdf.width()},
                         {"status", schwarz::to_string(trace.status)},
                         {"iterations", trace.iterations},
                         {"gre", final_gre.gre},
                         {"gre_star", star.gre}});
    }
    write_file_atomic(cfg.out / "scalability.txt", text);
    write_file_atomic(cfg.out / "scalability.json", table.dump(2) + "\n");
    fmt::print("{}", text);
    return kOk;
}

int cmd_evaluate(const EvaluateOptions& opt) {
    const bool pair = opt.reference && opt.prediction;
    if (!pair && opt.reports.empty()) {
        fail(ErrorKind::Config, "evaluate needs --reference and --prediction, or --reports");
    }
    if (pair) {
        const auto ref = read_velocity_csv(*opt.reference, "");
        const auto pred = read_velocity_csv(*opt.prediction, "");
        const ScalarField mask = opt.mask ? mask_from_sdf(read_field_csv(*opt.mask)) : ScalarField(ref.grid(), 1.0);
        const auto r = metrics::gre(ref, pred, mask);
        const auto text = metrics::report_json(r);
        write_file_atomic(opt.out / "report.json", text);
        fmt::print("{}", text);
    }
    if (!opt.reports.empty()) {
        std::vector<metrics::GreReport> reports;
        for (const auto& p : opt.reports) {
            json j;
            try {
                j = json::parse(read_file(p));
                metrics::GreReport r;
                r.gre = j.at("gre").get<double>();
                r.diverged = j.value("diverged", false);
                r.iterations = j.value("iterations", 0);
                reports.push_back(r);
            } catch (const json::exception& e) {
                fail(ErrorKind::Io, fmt::format("{}: {}", p.string(), e.what()));
            }
        }
        const auto h = metrics::categorize(reports);
        write_file_atomic(opt.out / "histogram.txt", metrics::histogram_text(h));
        write_file_atomic(opt.out / "histogram.json", metrics::histogram_json(h));
        fmt::print("{}", metrics::histogram_text(h));
    }
    return kOk;
}

int cmd_inspect_weights(const fs::path& path) {
    const auto model = usds::load_weights(path);
    const auto& in = model.input_shape();
    fmt::print("format version {}\ninput {}x{}x{}\nlayers {}\n", usds::kWeightFormatVersion, in.channels, in.height,
               in.width, model.layers().size());
    static constexpr const char* kKinds[] = {"?", "conv", "fc", "tconv"};
    static constexpr const char* kBranches[] = {"shared", "vx", "vy"};
    usds::TensorShape shape = in;
    usds::TensorShape shared_out = in;
    bool in_branch = false;
    for (std::size_t k = 0; k < model.layers().size(); ++k) {
        const auto& s = model.layers()[k].spec;
        if (s.branch != usds::Branch::Shared) {
            if (!in_branch || (k > 0 && model.layers()[k - 1].spec.branch != s.branch)) shape = shared_out;
            in_branch = true;
        }
        shape = usds::output_shape(s, shape);
        if (s.branch == usds::Branch::Shared) shared_out = shape;
        const std::string dims = s.kind == usds::LayerKind::FullyConnected
                                     ? fmt::format("in {}", s.in_dim)
                                     : fmt::format("{}->{} k{}x{} s{}x{} p{}x{}", s.in_channels, s.out_channels,
                                                   s.kernel_h, s.kernel_w, s.stride_h, s.stride_w, s.pad_h, s.pad_w);
        fmt::print("{:>3} {:<5} {:<6} {:<6} {:<28} -> {}x{}x{} ({} params)\n", k,
                   kKinds[static_cast<int>(s.kind)], kBranches[static_cast<int>(s.branch)],
                   s.relu ? "relu" : "linear", dims, shape.channels, shape.height, shape.width,
                   s.weight_count() + s.bias_count());
    }
    fmt::print("parameters {}\nchecksum ok\n", model.parameter_count());
    return kOk;
}

namespace {

struct RunFlags {
    std::string config;
    std::string geometry;
    std::uint64_t seed = 0;
    int height = 0;
    int sub_width = 0;
    int xi = 0;
    int delta = 0;
    double epsilon = 0.0;
    int max_iter = 0;
    std::string init;
    std::string backend;
    std::string weights;
    bool constrained = false;
    double v_max = 0.0;
    std::string reference;
    std::string out;
    int threads = 0;
    bool no_timing = false;
};

void add_run_flags(CLI::App* app, RunFlags& f, std::vector<CLI::Option*>& opts) {
    opts.push_back(app->add_option("--config", f.config, "INI run configuration"));
    opts.push_back(app->add_option("--geometry", f.geometry, "geometry description file"));
    opts.push_back(app->add_option("--seed", f.seed, "geometry seed when no file is given"));
    opts.push_back(app->add_option("--height", f.height, "pixels across the artery"));
    opts.push_back(app->add_option("--sub-width", f.sub_width, "subdomain width in pixels"));
    opts.push_back(app->add_option("--xi", f.xi, "input boundary width"));
    opts.push_back(app->add_option("--delta", f.delta, "overlap width (default 2 xi)"));
    opts.push_back(app->add_option("--epsilon", f.epsilon, "stopping tolerance in m/s"));
    opts.push_back(app->add_option("--max-iter", f.max_iter, "iteration limit"));
    opts.push_back(app->add_option("--init", f.init, "none|parabolic")->check(CLI::IsMember({"none", "parabolic"})));
    opts.push_back(app->add_option("--backend", f.backend, "cnn|stream|laplace")
                       ->check(CLI::IsMember({"cnn", "stream", "laplace"})));
    opts.push_back(app->add_option("--weights", f.weights, "weight file for the cnn backend"));
    opts.push_back(app->add_flag("--constrained", f.constrained, "enable the flow-rate constraint"));
    opts.push_back(app->add_option("--v-max", f.v_max, "inlet peak velocity in m/s"));
    opts.push_back(app->add_option("--reference", f.reference, "directory with reference vx.csv / vy.csv"));
    opts.push_back(app->add_option("--out", f.out, "output directory"));
    opts.push_back(app->add_option("--threads", f.threads, "solver threads per color phase"));
    opts.push_back(app->add_flag("--no-timing", f.no_timing, "write 0 for wall-clock times"));
}

RunConfig resolve_run_config(CLI::App* app, const RunFlags& f) {
    RunConfig c = app->count("--config") ? load_run_config(f.config) : RunConfig{};
    auto given = [&](const char* name) { return app->count(name) > 0; };
    if (given("--geometry")) c.geometry_file = f.geometry;
    if (given("--seed")) c.seed = f.seed;
    if (given("--height")) c.height = f.height;
    if (given("--sub-width")) c.sub_width = f.sub_width;
    if (given("--xi")) c.xi = f.xi;
    if (given("--delta")) c.delta = f.delta;
    if (given("--epsilon")) c.epsilon = f.epsilon;
    if (given("--max-iter")) c.max_iterations = f.max_iter;
    if (given("--init")) c.init_mode = schwarz::parse_init_mode(f.init);
    if (given("--backend")) c.backend = parse_backend(f.backend);
    if (given("--weights")) c.weights = f.weights;
    if (given("--constrained")) c.constrained = f.constrained;
    if (given("--v-max")) c.v_max_inlet = f.v_max;
    if (given("--reference")) c.reference = f.reference;
    if (given("--out")) c.out = f.out;
    if (given("--threads")) c.threads = f.threads;
    if (given("--no-timing")) c.timing = !f.no_timing;
    return c;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::Parameter: return kConfigError;
        case ErrorKind::Io: return kIoError;
        default: return kSolverError;
    }
}

}  // namespace

int main_entry(int argc, char** argv) {
    CLI::App app{"flowdd: overlapping Schwarz decomposition with subdomain flow surrogates"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    GenerateOptions gen;
    std::string gen_out;
    auto* g = app.add_subcommand("generate", "random channel geometries and their rasters");
    g->add_option("--seed", gen.seed, "base seed");
    g->add_option("--count", gen.count, "number of geometries");
    g->add_option("--out", gen_out, "output directory");
    g->add_flag("--straight", gen.straight, "straight channel preset");
    double strength_value = 0.0;
    auto* strength = g->add_option("--strength", strength_value, "override every stenosis strength");
    g->add_flag("--descriptions-only", gen.descriptions_only, "skip the SDF / mask rasters");
    g->add_option("--height", gen.height, "pixels across the artery");

    SynthesizeOptions syn;
    std::string syn_geoms;
    std::string syn_out;
    auto* s = app.add_subcommand("synthesize", "stream-function training pairs for each geometry");
    s->add_option("--geometries", syn_geoms, "directory of geom_*.ini files");
    s->add_option("--seed", syn.seed, "seed for the inlet velocity draws");
    s->add_option("--v-min", syn.v_min, "lower bound of the v_max draw in m/s");
    s->add_option("--v-max", syn.v_max, "upper bound of the v_max draw in m/s");
    s->add_option("--xi", syn.xi, "input boundary width");
    s->add_option("--height", syn.height, "pixels across the artery");
    s->add_option("--sub-width", syn.sub_width, "subdomain width");
    s->add_option("--out", syn_out, "output directory");

    RunFlags run_flags;
    std::vector<CLI::Option*> run_opts;
    auto* r = app.add_subcommand("run", "one Schwarz run");
    add_run_flags(r, run_flags, run_opts);

    RunFlags sc_flags;
    std::vector<CLI::Option*> sc_opts;
    std::vector<int> factors{2, 4, 8};
    std::string mode = "duplicate";
    auto* sc = app.add_subcommand("scalability", "runs on lengthened stenotic regions");
    add_run_flags(sc, sc_flags, sc_opts);
    sc->add_option("--factors", factors, "length factors")->check(CLI::IsMember({2, 4, 8}));
    sc->add_option("--mode", mode, "duplicate|random")->check(CLI::IsMember({"duplicate", "random"}));

    EvaluateOptions ev;
    std::string ev_ref, ev_pred, ev_mask, ev_out;
    std::vector<std::string> ev_reports;
    auto* e = app.add_subcommand("evaluate", "GRE of a prediction or a histogram of run reports");
    e->add_option("--reference", ev_ref, "directory with reference vx.csv / vy.csv");
    e->add_option("--prediction", ev_pred, "directory with predicted vx.csv / vy.csv");
    e->add_option("--mask", ev_mask, "mask or SDF CSV");
    e->add_option("--reports", ev_reports, "report.json files to bin");
    e->add_option("--out", ev_out, "output directory");

    std::string weights_path;
    auto* w = app.add_subcommand("inspect-weights", "print the layers of a weight file");
    w->add_option("path", weights_path, "weight file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kOk : kConfigError;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

    try {
        if (*g) {
            if (!gen_out.empty()) gen.out = gen_out;
            if (strength->count()) gen.strength = strength_value;
            return cmd_generate(gen);
        }
        if (*s) {
            if (!syn_geoms.empty()) syn.geometries = syn_geoms;
            if (!syn_out.empty()) syn.out = syn_out;
            return cmd_synthesize(syn);
        }
        if (*r) {
            return cmd_run(resolve_run_config(r, run_flags));
        }
        if (*sc) {
            ScalabilityOptions opt;
            opt.run = resolve_run_config(sc, sc_flags);
            opt.factors = factors;
            opt.mode = mode == "random" ? ScaleMode::Random : ScaleMode::Duplicate;
            return cmd_scalability(opt);
        }
        if (*e) {
            if (!ev_ref.empty()) ev.reference = ev_ref;
            if (!ev_pred.empty()) ev.prediction = ev_pred;
            if (!ev_mask.empty()) ev.mask = ev_mask;
            for (const auto& p : ev_reports) ev.reports.emplace_back(p);
            if (!ev_out.empty()) ev.out = ev_out;
            return cmd_evaluate(ev);
        }
        if (*w) {
            return cmd_inspect_weights(weights_path);
        }
    } catch (const usds::WeightFileError& err) {
        fmt::print(stderr, "error [{}]: {}\n", usds::to_string(err.code()), err.what());
        return kIoError;
    } catch (const Error& err) {
        fmt::print(stderr, "error [{}]: {}\n", to_string(err.kind()), err.what());
        return exit_code_for(err.kind());
    } catch (const std::exception& err) {
        fmt::print(stderr, "error: {}\n", err.what());
        return kSolverError;
    }
    return kConfigError;
}

}  // namespace flowdd::cli
