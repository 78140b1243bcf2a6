#include "pseudolabel/key_value.hpp"

#include "pseudolabel/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace pseudolabel {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

KeyValueList parse_key_values(std::string_view text) {
  KeyValueList out;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw ParseError("empty key", line_no);
      out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    pos = nl + 1;
  }
  return out;
}

double parse_number(std::string_view text) {
  text = trim(text);
  double v = 0;
  const char* first = text.data();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not an unsigned integer: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) || text[i] == ',')) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != ',') ++j;
    if (j > i) out.push_back(parse_number(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw std::invalid_argument("not a boolean: '" + std::string(text) + "'");
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace pseudolabel
