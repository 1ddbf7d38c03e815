// CSV text I/O and atomic file writes.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sidmp/simulate.hpp"

namespace sidmp::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Writes `content` to a temporary sibling of `path`, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string trajectory_csv(const simulate::Trajectory& traj);
std::string events_csv(const std::vector<simulate::Event>& events);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column, or -1.
  int column(std::string_view name) const;
  std::vector<double> column_values(int index) const;
};

/// Numeric CSV with one header line. Throws ValidationError with the line
/// number on malformed input.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

}  // namespace sidmp::io
