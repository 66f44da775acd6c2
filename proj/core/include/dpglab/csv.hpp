/* Minimal CSV support for the run artifacts.
 *
 * Files are UTF-8 with LF line endings and always carry a header row.
 * Numeric cells are rendered with %.10g so repeated runs produce
 * byte-identical files. Fields never contain commas or quotes, so no
 * quoting layer is needed on either side.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace dpglab::csv {

std::string format_double(double v);
std::string format_int(std::int64_t v);

class Writer {
 public:
  Writer(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or -1 when the file has no such column.
  int column(const std::string& name) const;
};

Table read_file(const std::string& path);

}  // namespace dpglab::csv
