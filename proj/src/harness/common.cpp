#include "nrdq/harness/common.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "nrdq/image.hpp"

namespace nrdq::harness {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  return fnv1a64(read_file(path));
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = pos + 1;
  }
  return out;
}

namespace {

template <typename T>
T parse_as(std::string_view s, std::string_view what) {
  T value{};
  const auto* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, value);
  if (s.empty() || r.ec != std::errc{} || r.ptr != end) {
    throw Error(fmt::format("bad {} '{}'", what, s));
  }
  return value;
}

}  // namespace

double parse_double(std::string_view s) {
  const double v = parse_as<double>(s, "number");
  if (!std::isfinite(v)) throw Error(fmt::format("non-finite number '{}'", s));
  return v;
}

std::int64_t parse_int(std::string_view s) { return parse_as<std::int64_t>(s, "integer"); }

std::uint64_t parse_u64(std::string_view s) { return parse_as<std::uint64_t>(s, "integer"); }

void require_csv_safe(std::string_view field) {
  if (field.find_first_of(",\n\r") != std::string_view::npos) {
    throw Error(fmt::format("'{}' contains a comma or newline", field));
  }
}

MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) return {};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace nrdq::harness
