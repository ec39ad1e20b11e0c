#pragma once

// Signal files: one-value-per-line CSV and binary/ASCII PGM images.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ftf/errors.hpp"
#include "ftf/graph.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

class ParseError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_real(std::string_view s, std::size_t line) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line) + ": not a finite real: '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

// One value per line; blank lines and lines starting with '#' are skipped.
inline Vector read_signal_csv(std::istream& is) {
  Vector v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    v.push_back(detail::parse_real(s, lineno));
  }
  return v;
}

inline void write_signal_csv(std::ostream& os, std::span<const double> v) {
  for (double x : v) os << format_real(x) << '\n';
}

// Gray image with pixels mapped to [0, 1], stored column-major (index = col * height + row)
// so that it lines up with LatticeSpec(height, width).
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 255;
  Vector pixels;

  LatticeSpec lattice() const { return LatticeSpec(height, width); }
};

namespace detail {

inline std::string next_pgm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

inline std::size_t parse_count(const std::string& tok, const char* what) {
  std::size_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw ParseError(std::string("PGM: bad ") + what + ": '" + tok + "'");
  return v;
}

}  // namespace detail

// P2 (ASCII) or P5 (binary, 8- or 16-bit big-endian).
inline GrayImage read_pgm(std::istream& is) {
  const std::string magic = detail::next_pgm_token(is);
  if (magic != "P2" && magic != "P5") throw ParseError("PGM: unsupported magic '" + magic + "'");
  GrayImage img;
  img.width = detail::parse_count(detail::next_pgm_token(is), "width");
  img.height = detail::parse_count(detail::next_pgm_token(is), "height");
  const std::size_t maxval = detail::parse_count(detail::next_pgm_token(is), "maxval");
  if (img.width == 0 || img.height == 0) throw ParseError("PGM: empty image");
  if (maxval == 0 || maxval > 65535) throw ParseError("PGM: maxval must be in [1, 65535]");
  img.maxval = static_cast<unsigned>(maxval);
  img.pixels.resize(img.width * img.height);
  const bool wide = maxval > 255;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      std::size_t raw = 0;
      if (magic == "P2") {
        raw = detail::parse_count(detail::next_pgm_token(is), "pixel");
      } else {
        const int hi = is.get();
        const int lo = wide ? is.get() : 0;
        if (hi == EOF || lo == EOF) throw ParseError("PGM: truncated pixel data");
        raw = wide ? (static_cast<std::size_t>(hi) << 8 | static_cast<std::size_t>(lo)) : static_cast<std::size_t>(hi);
      }
      if (raw > maxval) throw ParseError("PGM: pixel exceeds maxval");
      img.pixels[c * img.height + r] = static_cast<double>(raw) / static_cast<double>(maxval);
    }
  }
  return img;
}

// Values are clamped to [0, 1] and rescaled to [0, maxval].
inline void write_pgm(std::ostream& os, const GrayImage& img, bool binary = true) {
  detail::require_dims(img.pixels.size() == img.width * img.height, "write_pgm: pixel count mismatch");
  os << (binary ? "P5" : "P2") << '\n' << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  const bool wide = img.maxval > 255;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double v = std::clamp(img.pixels[c * img.height + r], 0.0, 1.0);
      const auto raw = static_cast<unsigned>(std::lround(v * img.maxval));
      if (!binary) {
        os << raw << (c + 1 == img.width ? '\n' : ' ');
      } else if (wide) {
        os.put(static_cast<char>(raw >> 8));
        os.put(static_cast<char>(raw & 0xff));
      } else {
        os.put(static_cast<char>(raw));
      }
    }
  }
}

}  // namespace ftf
