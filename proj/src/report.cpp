#include "fairmeasure/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fairmeasure {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

nlohmann::ordered_json num(double x) {
  if (!std::isfinite(x)) return fmt(x);
  // Shortest round-trip printing of the rounded value keeps at most 12 digits.
  return std::strtod(fmt(x).c_str(), nullptr);
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(std::fopen(path.c_str(), "wb")) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row(header);
}

CsvWriter::~CsvWriter() { std::fclose(out_); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) std::fputc(',', out_);
    std::fputs(cells[k].c_str(), out_);
  }
  std::fputc('\n', out_);
}

}  // namespace fairmeasure
