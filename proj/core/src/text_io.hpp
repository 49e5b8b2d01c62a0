#pragma once

// Line-oriented "key value" text parsing shared by the file formats.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace spikecp::detail {

/// Shortest-safe round-trip decimal (%.17g).
std::string format_double(double v);

class LineReader {
 public:
  LineReader(std::istream& is, std::string name) : is_(is), name_(std::move(name)) {}

  /// Tokens of the next non-blank, non-comment line; false at end of input.
  bool next(std::vector<std::string_view>& tokens);

  /// Next line, which must exist; `section` names what was expected.
  const std::vector<std::string_view>& expect(std::string_view section);

  /// Next line, which must be "<key> <value>"; returns the value token.
  std::string_view expect_value(std::string_view key);

  /// Header line "format <expected>"; VersionError on another version.
  void expect_format(std::string_view expected);

  int to_int(std::string_view token, std::string_view field) const;
  std::int64_t to_int64(std::string_view token, std::string_view field) const;
  std::uint64_t to_uint64(std::string_view token, std::string_view field) const;
  double to_double(std::string_view token, std::string_view field) const;

  /// Reads exactly `count` numbers from the next line into `out`.
  void read_row(std::size_t count, std::string_view field, double* out);

  [[noreturn]] void fail(std::string_view field, const std::string& what) const;

  std::size_t line() const noexcept { return line_no_; }
  const std::string& name() const noexcept { return name_; }

 private:
  std::istream& is_;
  std::string name_;
  std::string buffer_;
  std::vector<std::string_view> tokens_;
  std::size_t line_no_ = 0;
};

}  // namespace spikecp::detail
