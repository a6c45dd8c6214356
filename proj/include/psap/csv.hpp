// Minimal CSV reading for the plain numeric tables this project exchanges.
// Fields never contain commas or quotes.
#pragma once

#include <istream>
#include <string>
#include <vector>

namespace psap {

class CsvReader {
 public:
  explicit CsvReader(std::istream& in, std::string source = "<stream>");

  const std::vector<std::string>& header() const { return header_; }

  // Reads the next non-empty row; false at end of input. Rows whose width
  // differs from the header raise InputError.
  bool next(std::vector<std::string>& row);

  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

  [[noreturn]] void fail(const std::string& what) const;

  double to_double(const std::string& field) const;
  long long to_int(const std::string& field) const;

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace psap
