#include "text_io.hpp"

#include <charconv>
#include <cstdio>

#include "spikecp/error.hpp"

namespace spikecp::detail {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool LineReader::next(std::vector<std::string_view>& tokens) {
  while (std::getline(is_, buffer_)) {
    ++line_no_;
    tokens.clear();
    std::string_view line(buffer_);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      if (j > i) tokens.push_back(line.substr(i, j - i));
      i = j;
    }
    if (!tokens.empty()) return true;
  }
  return false;
}

const std::vector<std::string_view>& LineReader::expect(std::string_view section) {
  if (!next(tokens_)) fail(section, "unexpected end of file, missing section '" +
                                        std::string(section) + "'");
  return tokens_;
}

std::string_view LineReader::expect_value(std::string_view key) {
  const auto& t = expect(key);
  if (t[0] != key) fail(key, "expected key '" + std::string(key) + "', found '" +
                                 std::string(t[0]) + "'");
  if (t.size() != 2) fail(key, "expected exactly one value");
  return t[1];
}

void LineReader::expect_format(std::string_view expected) {
  const auto value = expect_value("format");
  if (value != expected) {
    throw VersionError(name_ + ":" + std::to_string(line_no_) + ": unsupported format version '" +
                       std::string(value) + "', expected '" + std::string(expected) + "'");
  }
}

int LineReader::to_int(std::string_view token, std::string_view field) const {
  int v = 0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size()) {
    fail(field, "expected an integer, found '" + std::string(token) + "'");
  }
  return v;
}

std::int64_t LineReader::to_int64(std::string_view token, std::string_view field) const {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size()) {
    fail(field, "expected an integer, found '" + std::string(token) + "'");
  }
  return v;
}

std::uint64_t LineReader::to_uint64(std::string_view token, std::string_view field) const {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size()) {
    fail(field, "expected an unsigned integer, found '" + std::string(token) + "'");
  }
  return v;
}

double LineReader::to_double(std::string_view token, std::string_view field) const {
  double v = 0.0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size()) {
    fail(field, "expected a number, found '" + std::string(token) + "'");
  }
  return v;
}

void LineReader::read_row(std::size_t count, std::string_view field, double* out) {
  const auto& t = expect(field);
  if (t.size() != count) {
    fail(field, "expected " + std::to_string(count) + " values, found " +
                    std::to_string(t.size()));
  }
  for (std::size_t i = 0; i < count; ++i) out[i] = to_double(t[i], field);
}

void LineReader::fail(std::string_view field, const std::string& what) const {
  throw ParseError(name_, line_no_, std::string(field), what);
}

}  // namespace spikecp::detail
