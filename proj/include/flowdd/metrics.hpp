#pragma once

// Error metrics for predicted velocity fields and the GRE histogram.

#include "flowdd/grid.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flowdd::metrics {

/// Added to the reference norm in the GRE denominator (m/s).
inline constexpr double kGreRegularizer = 1.0e-4;

/// Histogram bins; bounds are half-open (a, b], so 0.01 falls in UpTo1.
enum class Category { UpTo1 = 0, UpTo5, UpTo10, UpTo20, Above20, Diverged };
inline constexpr std::size_t kCategoryCount = 6;

const char* label(Category c);
Category category_of(double gre, bool diverged = false);

struct GreReport {
    double gre = 0.0;
    double gre_x = 0.0;
    double gre_y = 0.0;
    Category category = Category::UpTo1;
    int iterations = 0;
    double v_max_inlet = 0.0;
    bool diverged = false;
};

/// Sum by recursive halving; the result does not depend on thread count.
double pairwise_sum(std::span<const double> values);

/// GRE = |v - v_pred| / (|v| + 1e-4) over pixels with mask > 0, both
/// components stacked; gre_x and gre_y use one component each. Only the
/// first `columns` columns count when given.
GreReport gre(const VelocityField& v, const VelocityField& v_pred, const ScalarField& mask,
              std::optional<int> columns = std::nullopt);

using FieldPair = std::pair<const VelocityField*, const VelocityField*>;

/// Mean over the batch of the per-image mean squared velocity error.
/// Throws Parameter on an empty batch, Extent on a shape mismatch.
double mse(std::span<const FieldPair> batch);

struct Histogram {
    std::array<std::size_t, kCategoryCount> counts{};
    std::size_t total = 0;

    double percent(Category c) const;
};

/// Diverged reports land in the Diverged bin whatever their GRE.
Histogram categorize(std::span<const GreReport> reports);

std::string histogram_text(const Histogram& h);
std::string histogram_json(const Histogram& h);
std::string report_json(const GreReport& r);

}  // namespace flowdd::metrics
