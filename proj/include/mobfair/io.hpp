#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mobfair::io {

// Minimal CSV reader for the comma-separated, unquoted files this tool
// exchanges. The first row is the header.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path);
  static CsvTable parse(std::string_view text, std::string source = "<memory>");

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }

  // Index of a named column; throws InputError if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  double number(std::size_t row, std::size_t col) const;
  std::int64_t integer(std::size_t row, std::size_t col) const;
  const std::string& text(std::size_t row, std::size_t col) const { return rows_[row][col]; }

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Shortest decimal text that round-trips the double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);

// Writes via a temporary file and rename so readers never see partial output.
void write_file(const std::filesystem::path& path, std::string_view content);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json read_json(const std::filesystem::path& path);

// 64-bit FNV-1a, rendered as 16 hex digits. Used for config and artifact
// fingerprints, not for security.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace mobfair::io
