#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace sfwm::output {

// Shortest round-trip representation; empty string for NaN.
std::string format_double(double x);

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<Cell> row);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace sfwm::output
