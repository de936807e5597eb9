#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lcm {

// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

// Parses a complete decimal token; throws DataError mentioning `context` otherwise.
double parse_number(std::string_view token, const std::string& context);
int parse_int(std::string_view token, const std::string& context);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Minimal comma-separated table without quoting. Lines starting with '#' are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // source line of each row
  std::vector<std::string> comments;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lcm
