#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "poolmatch/network.hpp"

namespace poolmatch::csv {

// Minimal reader for the comma-separated, quote-free files used by this
// project. The first line must equal the expected header exactly.
class Reader {
 public:
  Reader(std::istream& in, std::string_view expected_header) : in_(in) {
    std::string header;
    if (!next_line(header)) throw ParseError("missing header, expected '" + std::string(expected_header) + "'", 1);
    if (header != expected_header)
      throw ParseError("bad header '" + header + "', expected '" + std::string(expected_header) + "'", line_);
  }

  // Returns false at end of input. Blank lines are skipped.
  bool row(std::vector<std::string_view>& fields) {
    while (next_line(buffer_)) {
      if (buffer_.empty()) continue;
      fields.clear();
      std::string_view rest(buffer_);
      for (;;) {
        auto comma = rest.find(',');
        fields.push_back(rest.substr(0, comma));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

  template <typename T>
  T field(std::string_view text, std::string_view name) const {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
      throw ParseError("bad value '" + std::string(text) + "' for " + std::string(name), line_);
    return value;
  }

 private:
  bool next_line(std::string& out) {
    if (!std::getline(in_, out)) return false;
    ++line_;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
  }

  std::istream& in_;
  std::string buffer_;
  std::size_t line_ = 0;
};

}  // namespace poolmatch::csv
