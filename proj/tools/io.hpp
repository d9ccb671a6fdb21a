#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bsml::io {

struct CsvMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> header;  // empty when the file had none
};

/// Comma-separated numeric matrix with an optional single header row
/// (detected when the first row has any non-numeric cell). Throws
/// InputError naming file, row and column.
CsvMatrix read_csv(const std::filesystem::path& path);

/// 17 significant digits, so values re-parse bit-exactly.
std::string format_double(double value);
std::string to_csv(const Eigen::MatrixXd& m);

/// Writes to a sibling temporary file then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace bsml::io
