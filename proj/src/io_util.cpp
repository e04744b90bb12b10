#include "protoverb/io_util.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace protoverb {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open file for writing: " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("rename failed for " + path.string() + ": " +
                             ec.message());
  }
}

std::string trim(std::string_view s) {
  size_t begin = 0;
  size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) {
    ++begin;
  }
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) {
    --end;
  }
  return std::string(s.substr(begin, end - begin));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      parts.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::string format_double(double value) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw std::runtime_error("not a real number: '" + std::string(text) + "'");
  }
  return value;
}

std::string fixed4(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return std::string(buf);
}

void append_row(std::string& out, std::span<const double> row) {
  for (size_t i = 0; i < row.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += format_double(row[i]);
  }
  out.push_back('\n');
}

std::vector<double> parse_row(std::string_view line, size_t expected) {
  std::vector<double> values;
  values.reserve(expected);
  size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    size_t end = pos;
    while (end < line.size() && line[end] != ' ') ++end;
    if (end > pos) values.push_back(parse_double(line.substr(pos, end - pos)));
    pos = end;
  }
  if (values.size() != expected) {
    throw std::runtime_error("expected " + std::to_string(expected) +
                             " values per row, got " +
                             std::to_string(values.size()));
  }
  return values;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": empty key");
    }
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const fs::path& path) {
  return parse_config_text(read_file(path));
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw std::runtime_error("config key '" + key + "': not a boolean: '" +
                           value + "'");
}

long parse_long(const std::string& value, const std::string& key) {
  long parsed = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw std::runtime_error("config key '" + key + "': not an integer: '" +
                             value + "'");
  }
  return parsed;
}

}  // namespace protoverb
