#include "flowdd/metrics.hpp"

#include "flowdd/error.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace flowdd::metrics {

const char* label(Category c) {
    switch (c) {
        case Category::UpTo1: return "<=1%";
        case Category::UpTo5: return "1-5%";
        case Category::UpTo10: return "5-10%";
        case Category::UpTo20: return "10-20%";
        case Category::Above20: return ">20%";
        case Category::Diverged: return "diverged";
    }
    return "?";
}

Category category_of(double gre, bool diverged) {
    if (diverged || !std::isfinite(gre)) {
        return Category::Diverged;
    }
    if (gre <= 0.01) return Category::UpTo1;
    if (gre <= 0.05) return Category::UpTo5;
    if (gre <= 0.10) return Category::UpTo10;
    if (gre <= 0.20) return Category::UpTo20;
    return Category::Above20;
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

GreReport gre(const VelocityField& v, const VelocityField& v_pred, const ScalarField& mask,
              std::optional<int> columns) {
    const auto& g = v.grid();
    if (!g.same_shape(v_pred.grid()) || !g.same_shape(mask.grid())) {
        fail(ErrorKind::Extent, "gre: fields live on different grids");
    }
    const int ncol = columns ? std::clamp(*columns, 0, g.width) : g.width;
    std::vector<double> ex, ey, rx, ry;
    ex.reserve(g.size());
    ey.reserve(g.size());
    rx.reserve(g.size());
    ry.reserve(g.size());
    for (int j = 0; j < g.height; ++j) {
        for (int i = 0; i < ncol; ++i) {
            if (mask(i, j) <= 0.0) {
                continue;
            }
            const double dx = v.vx(i, j) - v_pred.vx(i, j);
            const double dy = v.vy(i, j) - v_pred.vy(i, j);
            ex.push_back(dx * dx);
            ey.push_back(dy * dy);
            rx.push_back(v.vx(i, j) * v.vx(i, j));
            ry.push_back(v.vy(i, j) * v.vy(i, j));
        }
    }
    const double sex = pairwise_sum(ex);
    const double sey = pairwise_sum(ey);
    const double srx = pairwise_sum(rx);
    const double sry = pairwise_sum(ry);
    GreReport r;
    r.gre = std::sqrt(sex + sey) / (std::sqrt(srx + sry) + kGreRegularizer);
    r.gre_x = std::sqrt(sex) / (std::sqrt(srx) + kGreRegularizer);
    r.gre_y = std::sqrt(sey) / (std::sqrt(sry) + kGreRegularizer);
    r.category = category_of(r.gre);
    return r;
}

double mse(std::span<const FieldPair> batch) {
    if (batch.empty()) {
        fail(ErrorKind::Parameter, "mse of an empty batch");
    }
    std::vector<double> per_image;
    per_image.reserve(batch.size());
    std::vector<double> sq;
    for (const auto& [a, b] : batch) {
        if (!(a->grid().same_shape(b->grid()))) {
            fail(ErrorKind::Extent, "mse: pair fields live on different grids");
        }
        const auto ax = a->vx.values();
        const auto ay = a->vy.values();
        const auto bx = b->vx.values();
        const auto by = b->vy.values();
        sq.resize(ax.size());
        for (std::size_t k = 0; k < ax.size(); ++k) {
            const double dx = ax[k] - bx[k];
            const double dy = ay[k] - by[k];
            sq[k] = dx * dx + dy * dy;
        }
        per_image.push_back(pairwise_sum(sq) / static_cast<double>(sq.size()));
    }
    return pairwise_sum(per_image) / static_cast<double>(per_image.size());
}

double Histogram::percent(Category c) const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(counts[static_cast<std::size_t>(c)]) / total;
}

Histogram categorize(std::span<const GreReport> reports) {
    Histogram h;
    for (const auto& r : reports) {
        ++h.counts[static_cast<std::size_t>(category_of(r.gre, r.diverged))];
    }
    h.total = reports.size();
    return h;
}

std::string histogram_text(const Histogram& h) {
    std::string out;
    for (std::size_t k = 0; k < kCategoryCount; ++k) {
        const auto c = static_cast<Category>(k);
        out += fmt::format("{:<9} {:>6} {:>7.2f}%\n", label(c), h.counts[k], h.percent(c));
    }
    out += fmt::format("{:<9} {:>6}\n", "total", h.total);
    return out;
}

std::string histogram_json(const Histogram& h) {
    nlohmann::ordered_json j;
    j["total"] = h.total;
    auto& bins = j["bins"];
    bins = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < kCategoryCount; ++k) {
        const auto c = static_cast<Category>(k);
        bins.push_back({{"category", label(c)}, {"count", h.counts[k]}, {"percent", h.percent(c)}});
    }
    return j.dump(2) + "\n";
}

std::string report_json(const GreReport& r) {
    nlohmann::ordered_json j;
    j["gre"] = r.gre;
    j["gre_x"] = r.gre_x;
    j["gre_y"] = r.gre_y;
    j["category"] = label(r.diverged ? Category::Diverged : r.category);
    j["iterations"] = r.iterations;
    j["v_max_inlet"] = r.v_max_inlet;
    j["diverged"] = r.diverged;
    return j.dump(2) + "\n";
}

}  // namespace flowdd::metrics
