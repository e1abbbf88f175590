#include "dwell/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "dwell/core.hpp"

namespace dwell::io {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

namespace {

void dump(std::ostringstream& os, const nlohmann::json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad << nlohmann::json(it.key()).dump() << (indent > 0 ? ": " : ":");
        dump(os, it.value(), indent, depth + 1);
      }
      os << nl << close << '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[' << nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ',' << nl;
        os << pad;
        dump(os, j[i], indent, depth + 1);
      }
      os << nl << close << ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_number(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::ostringstream os;
  dump(os, j, indent, 0);
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, dump_json(j) + "\n"); }

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()) {
  if (!out_) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw Error(ErrorKind::InvalidArgument, "csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_number(values[i]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw Error(ErrorKind::InvalidArgument, "csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
}

std::string gnuplot_script(const std::string& csv, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotLine>& lines, const std::string& png) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set terminal pngcairo size 900,600\n"
    << "set output '" << png << "'\n"
    << "set xlabel '" << xlabel << "'\n"
    << "set ylabel '" << ylabel << "'\n"
    << "plot ";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) s << ", \\\n     ";
    s << "'" << csv << "' every ::1 using " << lines[i].using_spec << " with lines title '" << lines[i].title << "'";
  }
  s << '\n';
  return s.str();
}

void prepare_run_directory(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::InvalidArgument, dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw Error(ErrorKind::InvalidArgument, dir.string() + " is not empty (use --force to overwrite)");
      if (!fs::exists(dir / "manifest.json"))
        throw Error(ErrorKind::InvalidArgument, dir.string() + " does not look like a run directory; not overwriting");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

}  // namespace dwell::io
