#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace rcm::io {

/// Shortest round-trip decimal form; deterministic across runs.
std::string fmt_double(double v);

/// Minimal CSV table with a fixed header. Rows are written verbatim.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  CsvTable& row(const std::vector<std::string>& cells);
  std::string str() const;
  void write(const std::filesystem::path& path) const;
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// Index of a named column; throws if absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> numeric(const std::string& name) const;
};

CsvData read_csv(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Line/scatter chart rendered as standalone SVG.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points_only = false;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<double> hlines;  // reference lines at these y values
};

std::string render_svg(const std::vector<Series>& series, const ChartOptions& opts);

}  // namespace rcm::io
