#include "gmc/common.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace gmc {

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t h) {
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_string(std::string_view s) {
  return fnv1a(std::as_bytes(std::span(s.data(), s.size())));
}

std::uint64_t hash_matrix(const Matrix& m) {
  std::array<Index, 2> shape{m.rows(), m.cols()};
  std::uint64_t h = fnv1a(std::as_bytes(std::span(shape)));
  return fnv1a(std::as_bytes(std::span(m.data(), static_cast<std::size_t>(m.size()))), h);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

}  // namespace gmc
