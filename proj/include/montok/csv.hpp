#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace montok::csv {

// Shortest decimal string that round-trips the exact double (std::to_chars).
std::string format_double(double value);

// RFC-4180 style: quote fields containing commas, quotes or newlines.
std::string escape_field(const std::string& field);

// Parses a CSV file (quoted fields honored); the first row is the header.
// Throws MissingFile / IoError.
std::vector<std::vector<std::string>> read_file(const std::filesystem::path& path);

class Writer {
 public:
  explicit Writer(std::vector<std::string> header);

  // Throws LengthMismatch when the row arity differs from the header.
  void add_row(std::vector<std::string> row);

  std::string to_string() const;  // '\n' line endings, trailing newline

  // Writes via a temp file and rename so readers never see partial content.
  void write_file(const std::filesystem::path& path) const;

  std::size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace montok::csv
