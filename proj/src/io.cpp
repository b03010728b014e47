#include "magt/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace magt {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string points_header(Eigen::Index dim) {
  std::string out;
  for (Eigen::Index j = 0; j < dim; ++j) out += (j ? ",x" : "x") + std::to_string(j);
  return out;
}

std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_points_csv(const std::filesystem::path& path, const Matrix& points) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << points_header(points.cols()) << '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << format_double(points(i, j));
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

Matrix read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv(line);
  const Eigen::Index dim = static_cast<Eigen::Index>(header.size());
  if (dim == 0 || line != points_header(dim))
    throw ConfigError(path.string() + ": expected header x0,...,x{D-1}, got '" + line + "'");
  std::vector<double> values;
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv(line);
    if (static_cast<Eigen::Index>(fields.size()) != dim)
      throw ConfigError(path.string() + ": row " + std::to_string(row) + " has " +
                        std::to_string(fields.size()) + " fields, expected " + std::to_string(dim));
    for (const auto& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw ConfigError(path.string() + ": row " + std::to_string(row) + ": bad number '" + f + "'");
      values.push_back(v);
    }
  }
  Matrix out(static_cast<Eigen::Index>(values.size()) / dim, dim);
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

CsvAppender::CsvAppender(std::filesystem::path path, std::vector<std::string> columns)
    : path_(std::move(path)), columns_(std::move(columns)) {
  const std::string header = join_csv(columns_);
  if (std::filesystem::exists(path_) && std::filesystem::file_size(path_) > 0) {
    std::ifstream in(path_);
    std::string first;
    std::getline(in, first);
    if (first != header)
      throw ConfigError(path_.string() + ": existing header '" + first + "' differs from '" + header + "'");
    return;
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path_.string());
  out << header << '\n';
}

void CsvAppender::append(const std::vector<std::string>& fields) {
  require_dims(fields.size() == columns_.size(), "csv append: field count differs from header");
  std::ofstream out(path_, std::ios::app);
  if (!out) throw ConfigError("cannot append to " + path_.string());
  out << join_csv(fields) << '\n';
}

}  // namespace magt
