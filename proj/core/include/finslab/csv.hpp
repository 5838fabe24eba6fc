#pragma once

#include <string>
#include <vector>

namespace finslab {

// Deterministic CSV emission: fixed %.12g formatting, one header line, '\n'
// endings; identical inputs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  void row(const std::vector<double>& values);
  void row_text(const std::string& first, const std::vector<double>& values);

 private:
  struct Impl;
  Impl* impl_;
};

std::string format_num(double v);
void ensure_dir(const std::string& path);

}  // namespace finslab
