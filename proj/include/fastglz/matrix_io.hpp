#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fastglz/types.hpp"

namespace fastglz::io {

enum class Format { Csv, Fglzmat };
/// How rows of the file map to the model: features_by_trials stores X as is
/// (p rows), trials_by_features stores X^T.
enum class Orientation { FeaturesByTrials, TrialsByFeatures };

Format parse_format(std::string_view name);
Orientation parse_orientation(std::string_view name);
/// Format from the extension: ".csv" or ".fglzmat".
Format format_from_path(const std::filesystem::path& path);

/// Binary layout: "FGLZMAT1", u64 rows, u64 cols, u64 type tag (1 = binary64),
/// then rows*cols little-endian doubles in column-major order.
Matrix read_fglzmat(const std::filesystem::path& path);
void write_fglzmat(const std::filesystem::path& path, const Matrix& m);

/// Comma-separated numbers, one row per line. A first line containing any
/// non-numeric field is taken as a header and skipped.
Matrix read_csv(const std::filesystem::path& path);
/// Writes with 17 significant digits, so binary64 values round-trip.
void write_csv(const std::filesystem::path& path, const Matrix& m);

/// Reads and transposes as needed so the result is oriented as stored for
/// FeaturesByTrials and transposed for TrialsByFeatures.
Matrix load_matrix(const std::filesystem::path& path, Format format, Orientation orientation);
void save_matrix(const std::filesystem::path& path, const Matrix& m, Format format);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace fastglz::io
