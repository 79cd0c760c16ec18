#pragma once

// Report plumbing: doubles rounded to 12 significant digits, JSON and CSV
// files written byte-for-byte reproducibly.

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace fairmeasure {

/// printf("%.12g"); "nan", "inf" and "-inf" for non-finite values.
std::string fmt(double x);

/// x rounded to 12 significant digits, or the fmt string when non-finite
/// (JSON has no NaN or infinity).
nlohmann::ordered_json num(double x);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);

 private:
  std::FILE* out_;
};

}  // namespace fairmeasure
