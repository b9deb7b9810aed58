#include "flowdd/schwarz.hpp"

#include "flowdd/error.hpp"
#include "flowdd/field_io.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <exception>
#include <thread>

namespace flowdd::schwarz {

int SubdomainLayout::covered_width() const noexcept {
    const int n = count();
    return n == 0 ? 0 : n * width - (n - 1) * delta;
}

SubdomainLayout decompose(int global_width, int width, int delta, int xi) {
    if (xi < 1 || 3 * xi >= width) {
        fail(ErrorKind::Parameter, fmt::format("xi = {} needs 1 <= xi < W / 3 = {}", xi, width / 3.0));
    }
    if (delta < 2 * xi) {
        fail(ErrorKind::Parameter, fmt::format("delta = {} below delta_min = 2 xi = {}", delta, 2 * xi));
    }
    if (delta > width - xi) {
        fail(ErrorKind::Parameter, fmt::format("delta = {} above delta_max = W - xi = {}", delta, width - xi));
    }
    if (global_width < width) {
        fail(ErrorKind::Parameter,
             fmt::format("global width {} smaller than subdomain width {}", global_width, width));
    }
    SubdomainLayout l;
    l.global_width = global_width;
    l.width = width;
    l.delta = delta;
    l.xi = xi;
    const int step = width - delta;
    const int n = 1 + (global_width - width) / step;
    for (int k = 0; k < n; ++k) l.offsets.push_back(k * step);
    return l;
}

const char* to_string(InitMode m) { return m == InitMode::None ? "none" : "parabolic"; }

const char* to_string(Status s) {
    switch (s) {
        case Status::Converged: return "Converged";
        case Status::Stagnated: return "Stagnated";
        case Status::Diverged: return "Diverged";
        case Status::MaxIter: return "MaxIter";
    }
    return "?";
}

InitMode parse_init_mode(const std::string& s) {
    if (s == "none") return InitMode::None;
    if (s == "parabolic") return InitMode::Parabolic;
    fail(ErrorKind::Config, fmt::format("unknown init mode '{}' (none|parabolic)", s));
}

void SchwarzConfig::validate() const {
    if (!(epsilon > 0.0)) fail(ErrorKind::Config, "epsilon must be positive");
    if (max_iterations < 1) fail(ErrorKind::Config, "max_iterations must be at least 1");
    if (stagnation_window < 1 || divergence_window < 1) fail(ErrorKind::Config, "windows must be at least 1");
    if (!(stagnation_threshold >= 0.0) || !(divergence_factor > 1.0)) {
        fail(ErrorKind::Config, "stagnation threshold must be >= 0 and divergence factor > 1");
    }
    if (threads < 1) fail(ErrorKind::Config, "threads must be at least 1");
}

namespace {

std::vector<char> immutable_columns(const SubdomainLayout& layout) {
    std::vector<char> imm(static_cast<std::size_t>(layout.global_width), 0);
    const int last = layout.offsets.back() + layout.width;
    for (int k = 0; k < layout.xi; ++k) {
        imm[static_cast<std::size_t>(k)] = 1;
        imm[static_cast<std::size_t>(last - 1 - k)] = 1;
    }
    return imm;
}

void require_layout(const SubdomainLayout& layout, const PixelGrid& g) {
    if (layout.offsets.empty()) {
        fail(ErrorKind::Config, "empty subdomain layout");
    }
    if (g.width != layout.global_width) {
        fail(ErrorKind::Config,
             fmt::format("global field has {} columns, layout expects {}", g.width, layout.global_width));
    }
}

void copy_columns(const VelocityField& src, int src_col, VelocityField& dst, int dst_col, int count) {
    for (int j = 0; j < dst.grid().height; ++j) {
        for (int k = 0; k < count; ++k) {
            dst.vx(dst_col + k, j) = src.vx(src_col + k, j);
            dst.vy(dst_col + k, j) = src.vy(src_col + k, j);
        }
    }
}

// Solves subdomains `which` reading from `source`; results[k] belongs to which[k].
std::vector<VelocityField> solve_phase(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                                       const SchwarzProblem& problem, const VelocityField& source,
                                       const std::vector<int>& which, int threads) {
    std::vector<VelocityField> results(which.size());
    std::vector<std::exception_ptr> errors(which.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < which.size(); k = next++) {
            try {
                const int n = which[k];
                const auto input =
                    usds::SolverInput::from_global(problem.sdf, source, layout.offsets[static_cast<std::size_t>(n)],
                                                   layout.width, layout.xi, problem.q_inlet, problem.sdf_max);
                results[k] = solver.solve(input);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int nthreads = std::min<int>(threads, static_cast<int>(which.size()));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    }
    for (std::size_t k = 0; k < which.size(); ++k) {
        if (!errors[k]) {
            continue;
        }
        try {
            std::rethrow_exception(errors[k]);
        } catch (const Error& e) {
            const auto kind = e.kind() == ErrorKind::Numeric ? ErrorKind::Numeric : ErrorKind::Solver;
            fail(kind, fmt::format("subdomain {}: {}", which[k], e.what()));
        } catch (const std::exception& e) {
            fail(ErrorKind::Solver, fmt::format("subdomain {}: {}", which[k], e.what()));
        }
    }
    return results;
}

void write_back(const SubdomainLayout& layout, const std::vector<char>& immutable, int n,
                const VelocityField& result, VelocityField& global, std::vector<int>* write_counts) {
    const int off = layout.offsets[static_cast<std::size_t>(n)];
    const int h = global.grid().height;
    for (int i = 0; i < layout.width; ++i) {
        const int c = off + i;
        if (immutable[static_cast<std::size_t>(c)]) {
            continue;
        }
        for (int j = 0; j < h; ++j) {
            global.vx(c, j) = result.vx(i, j);
            global.vy(c, j) = result.vy(i, j);
            if (write_counts) {
                ++(*write_counts)[static_cast<std::size_t>(j) * layout.global_width + c];
            }
        }
    }
}

std::vector<int> color(const SubdomainLayout& layout, bool red) {
    std::vector<int> out;
    for (int n = 0; n < layout.count(); ++n) {
        if (SubdomainLayout::is_red(n) == red) out.push_back(n);
    }
    return out;
}

}  // namespace

BoundaryProfiles BoundaryProfiles::from_field(const VelocityField& field, const SubdomainLayout& layout) {
    require_layout(layout, field.grid());
    const int last = layout.offsets.back() + layout.width;
    return {field.crop(0, layout.xi), field.crop(last - layout.xi, layout.xi)};
}

SchwarzState initialize(const SubdomainLayout& layout, const SchwarzProblem& problem, InitMode mode,
                        const BoundaryProfiles& profiles) {
    const PixelGrid& g = problem.sdf.grid();
    require_layout(layout, g);
    for (const auto* p : {&profiles.inlet, &profiles.outlet}) {
        if (p->grid().width != layout.xi || p->grid().height != g.height) {
            fail(ErrorKind::Config, fmt::format("boundary profile is {}x{}, expected {}x{}", p->grid().width,
                                                p->grid().height, layout.xi, g.height));
        }
    }
    SchwarzState state{VelocityField(g), immutable_columns(layout)};
    const int last = layout.offsets.back() + layout.width;
    copy_columns(profiles.inlet, 0, state.field, 0, layout.xi);
    copy_columns(profiles.outlet, 0, state.field, last - layout.xi, layout.xi);

    if (mode == InitMode::None) {
        return state;
    }
    if (!problem.q_inlet || !(*problem.q_inlet > 0.0)) {
        fail(ErrorKind::Config, "parabolic initialization needs a positive q_inlet");
    }
    const double q = *problem.q_inlet;
    const ScalarField mask = mask_from_sdf(problem.sdf);
    std::vector<char> band(static_cast<std::size_t>(g.width), 0);
    for (int off : layout.offsets) {
        for (int k = 0; k < layout.xi; ++k) {
            band[static_cast<std::size_t>(off + k)] = 1;
            band[static_cast<std::size_t>(off + layout.width - 1 - k)] = 1;
        }
    }
    for (int i = 0; i < g.width; ++i) {
        if (!band[static_cast<std::size_t>(i)] || state.immutable[static_cast<std::size_t>(i)]) {
            continue;
        }
        int lo = -1;
        int hi = -1;
        for (int j = 0; j < g.height; ++j) {
            if (mask(i, j) > 0.0) {
                if (lo < 0) lo = j;
                hi = j;
            }
        }
        if (lo < 0) {
            continue;
        }
        const double y_lower = lo * g.dy;
        const double h = (hi - lo + 1) * g.dy;
        for (int j = lo; j <= hi; ++j) {
            const double s = (g.y_center(j) - y_lower) / h;
            state.field.vx(i, j) = 6.0 * q * s * (1.0 - s) / h * mask(i, j);
        }
    }
    return state;
}

IterationResult red_black_iterate(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                                  const SchwarzProblem& problem, SchwarzState& state, int threads,
                                  std::vector<int>* write_counts) {
    require_layout(layout, state.field.grid());
    const VelocityField previous = state.field;
    for (bool red : {true, false}) {
        const auto which = color(layout, red);
        const auto results = solve_phase(layout, solver, problem, state.field, which, threads);
        for (std::size_t k = 0; k < which.size(); ++k) {
            write_back(layout, state.immutable, which[k], results[k], state.field, write_counts);
        }
    }

    IterationResult r;
    const int covered = layout.covered_width();
    const int h = state.field.grid().height;
    for (int j = 0; j < h; ++j) {
        for (int i = 0; i < covered; ++i) {
            const double d = std::max(std::abs(state.field.vx(i, j) - previous.vx(i, j)),
                                      std::abs(state.field.vy(i, j) - previous.vy(i, j)));
            if (!std::isfinite(d) || !std::isfinite(state.field.vx(i, j)) || !std::isfinite(state.field.vy(i, j))) {
                return {std::numeric_limits<double>::quiet_NaN(), {i, j}};
            }
            if (d > r.abs_err) {
                r.abs_err = d;
                r.argmax = {i, j};
            }
        }
    }
    return r;
}

SchwarzTrace run(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                 const SchwarzProblem& problem, SchwarzState state, const SchwarzConfig& config,
                 const Observer& observer) {
    config.validate();
    SchwarzTrace trace;
    double running_min = std::numeric_limits<double>::infinity();
    int rises = 0;
    bool done = false;
    for (int k = 1; k <= config.max_iterations && !done; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        IterationResult it;
        try {
            it = red_black_iterate(layout, solver, problem, state, config.threads);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numeric) {
                throw;
            }
            trace.status = Status::Diverged;
            trace.message = e.what();
            trace.iterations = k - 1;
            break;
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        trace.history.push_back({k, it.abs_err, it.argmax, ms});
        trace.iterations = k;
        spdlog::debug("schwarz iteration {} abs_err {:.6e} at ({}, {})", k, it.abs_err, it.argmax.i, it.argmax.j);
        if (observer) {
            observer(k, state.field);
        }

        const double a = it.abs_err;
        const auto& hist = trace.history;
        if (k > 1) {
            rises = a > hist[hist.size() - 2].abs_err ? rises + 1 : 0;
        }
        if (std::isfinite(a)) {
            running_min = std::min(running_min, a);
        }

        if (!std::isfinite(a)) {
            trace.status = Status::Diverged;
            trace.message = fmt::format("non-finite value at pixel ({}, {})", it.argmax.i, it.argmax.j);
            done = true;
        } else if (a <= config.epsilon) {
            trace.status = Status::Converged;
            done = true;
        } else if (rises >= config.divergence_window && a > config.divergence_factor * running_min) {
            trace.status = Status::Diverged;
            trace.message = fmt::format("abs_err rose for {} iterations to {:.3e} (minimum {:.3e})", rises, a,
                                        running_min);
            done = true;
        } else if (k > config.stagnation_window) {
            const double ref = hist[hist.size() - 1 - static_cast<std::size_t>(config.stagnation_window)].abs_err;
            if (ref > 0.0 && std::abs(a - ref) / ref < config.stagnation_threshold) {
                trace.status = Status::Stagnated;
                trace.message = fmt::format("abs_err stagnated at {:.3e}", a);
                done = true;
            }
        }
        if (!done && k == config.max_iterations) {
            trace.status = Status::MaxIter;
        }
    }
    trace.field = std::move(state.field);
    return trace;
}

VelocityField gre_star_field(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                             const SchwarzProblem& problem, const VelocityField& truth, int threads) {
    require_layout(layout, truth.grid());
    const auto immutable = immutable_columns(layout);
    VelocityField out = truth;
    for (bool red : {true, false}) {
        const auto which = color(layout, red);
        const auto results = solve_phase(layout, solver, problem, truth, which, threads);
        for (std::size_t k = 0; k < which.size(); ++k) {
            write_back(layout, immutable, which[k], results[k], out, nullptr);
        }
    }
    return out;
}

metrics::GreReport gre_star(const SubdomainLayout& layout, const usds::SubdomainSolver& solver,
                            const SchwarzProblem& problem, const VelocityField& truth, int threads) {
    const auto field = gre_star_field(layout, solver, problem, truth, threads);
    auto r = metrics::gre(truth, field, mask_from_sdf(problem.sdf), layout.covered_width());
    r.iterations = 1;
    return r;
}

std::string trace_text(const SchwarzTrace& trace) {
    std::string out;
    for (const auto& r : trace.history) {
        out += fmt::format("{} {:.17g} {} {} {:.3f}\n", r.iteration, r.abs_err, r.argmax.i, r.argmax.j, r.wall_ms);
    }
    out += fmt::format("status {} {}\n", to_string(trace.status), trace.iterations);
    return out;
}

void write_trace(const std::filesystem::path& path, const SchwarzTrace& trace) {
    write_file_atomic(path, trace_text(trace));
}

}  // namespace flowdd::schwarz
