#ifndef PROTOVERB_IO_UTIL_HPP
#define PROTOVERB_IO_UTIL_HPP

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protoverb {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double value);
double parse_double(std::string_view text);

// Fixed 4-fractional-digit formatting for reports and CSVs.
std::string fixed4(double value);

void append_row(std::string& out, std::span<const double> row);
std::vector<double> parse_row(std::string_view line, size_t expected);

// Line-oriented `key = value` files. '#' starts a comment line.
// Later occurrences of a key override earlier ones.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(
    const std::filesystem::path& path);

bool parse_bool(const std::string& value, const std::string& key);
long parse_long(const std::string& value, const std::string& key);

}  // namespace protoverb

#endif
