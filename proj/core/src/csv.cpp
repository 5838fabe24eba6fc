#include "finslab/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "finslab/errors.hpp"

namespace finslab {

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error("cannot create output directory " + path + ": " + ec.message());
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary);  // binary: '\n' endings everywhere
  if (!impl_->out) throw Error("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    impl_->out << (i ? "," : "") << header[i];
  impl_->out << '\n';
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << (i ? "," : "") << format_num(values[i]);
  impl_->out << '\n';
}

void CsvWriter::row_text(const std::string& first, const std::vector<double>& values) {
  impl_->out << first;
  for (double v : values) impl_->out << ',' << format_num(v);
  impl_->out << '\n';
}

}  // namespace finslab
