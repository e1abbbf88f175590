#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace dwell::io {

/// 17 significant digits, '.' decimal, no locale. Non-finite values print as nan/inf.
std::string format_number(double v);

/// JSON text with every floating number written by format_number (non-finite -> null).
std::string dump_json(const nlohmann::json& j, int indent = 2);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

void write_text(const std::filesystem::path& path, const std::string& text);

/// gnuplot script plotting columns of a CSV file (first column as x unless `x` is given).
struct PlotLine {
  std::string using_spec;  // e.g. "1:3"
  std::string title;
};
std::string gnuplot_script(const std::string& csv, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotLine>& lines, const std::string& png);

/// Prepares a run directory. Refuses to touch an existing non-empty directory unless `force`,
/// and even then only when it holds a manifest from an earlier run.
void prepare_run_directory(const std::filesystem::path& dir, bool force);

}  // namespace dwell::io
