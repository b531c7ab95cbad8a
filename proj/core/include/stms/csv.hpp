#pragma once

#include <string>
#include <vector>

namespace stms {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

CsvTable read_csv(const std::string& path);

// Format a double with 17 significant digits so that reading it back
// reproduces the value bit-exactly.
std::string format_full(double v);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace stms
