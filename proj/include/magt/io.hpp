#pragma once
// CSV point files (x0,...,x{D-1}) and append-only result tables.

#include <filesystem>
#include <string>
#include <vector>

#include "magt/common.hpp"

namespace magt {

/// Shortest decimal form that round-trips is not required; 17 significant
/// digits always does.
std::string format_double(double value);

std::string points_header(Eigen::Index dim);

/// Writes `points` with the header x0,...,x{D-1}, one row per point.
void write_points_csv(const std::filesystem::path& path, const Matrix& points);

/// Reads a file written by write_points_csv. Throws ConfigError on a missing
/// file, a wrong header, ragged rows or unparsable numbers.
Matrix read_points_csv(const std::filesystem::path& path);

/// Appends rows to a CSV with a fixed header. A new file gets the header; an
/// existing one must already carry the same header.
class CsvAppender {
 public:
  CsvAppender(std::filesystem::path path, std::vector<std::string> columns);
  void append(const std::vector<std::string>& fields);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<std::string> columns_;
};

std::string join_csv(const std::vector<std::string>& fields);
std::vector<std::string> split_csv(const std::string& line);

}  // namespace magt
