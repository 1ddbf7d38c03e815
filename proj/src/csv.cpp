#include "sidmp/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace sidmp::io {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("io", "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("io", "cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string trajectory_csv(const simulate::Trajectory& traj) {
  std::string s = "t";
  for (int j = 0; j < traj.dim(); ++j) s += ",state_" + std::to_string(j);
  s += '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    s += format_double(traj.t[i]);
    for (int j = 0; j < traj.dim(); ++j) {
      s += ',';
      s += format_double(traj.x(static_cast<Eigen::Index>(i), j));
    }
    s += '\n';
  }
  return s;
}

std::string events_csv(const std::vector<simulate::Event>& events) {
  std::string s = "t,event\n";
  for (const auto& e : events) s += format_double(e.time) + "," + e.id + "\n";
  return s;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> CsvTable::column_values(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= header.size())
    throw DimensionError("CSV column index out of range");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(index)]);
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (table.header.empty()) {
      for (auto f : fields) table.header.emplace_back(f);
      continue;
    }
    if (fields.size() != table.header.size())
      throw ValidationError("CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      double v = 0.0;
      const auto f = fields[i];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw ValidationError("CSV line " + std::to_string(line_no) + ", column '" +
                              table.header[i] + "': not a number");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw ValidationError("CSV input is empty");
  return table;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

}  // namespace sidmp::io
