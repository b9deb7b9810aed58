#pragma once

// Field CSV format: one file per scalar field, H lines of W comma-separated
// values, first line = row 0 = lower wall side, no header. A sidecar
// "<stem>.meta" file carries the grid as key = value lines
// (width, height, dy, origin_x, x_ref, units).

#include "flowdd/grid.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace flowdd {

/// Writes `path` and its sidecar. Both files are written atomically
/// (temporary file + rename).
void write_field_csv(const std::filesystem::path& path, const ScalarField& field,
                     std::string_view units = "m/s");

/// Reads a field and its sidecar; Io on missing files, Invariant on a shape
/// mismatch between CSV and metadata.
ScalarField read_field_csv(const std::filesystem::path& path);

std::filesystem::path meta_path(const std::filesystem::path& csv_path);

/// `<prefix>vx.csv` / `<prefix>vy.csv`.
void write_velocity_csv(const std::filesystem::path& dir, std::string_view prefix,
                        const VelocityField& v);
VelocityField read_velocity_csv(const std::filesystem::path& dir, std::string_view prefix);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace flowdd
