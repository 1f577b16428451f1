#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nrdq::harness {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename, so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view content);
std::uint64_t hash_file(const std::filesystem::path& path);

/// Splits one CSV line on commas (no quoting; fields never contain commas).
std::vector<std::string> split_csv(std::string_view line);
/// Lines without trailing '\r'; lines starting with '#' and blank lines are
/// returned too so callers can read headers.
std::vector<std::string> split_lines(std::string_view text);

double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);
std::uint64_t parse_u64(std::string_view s);

/// Rejects ids that would break the CSV format.
void require_csv_safe(std::string_view field);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
/// Population standard deviation; empty input gives {0, 0}.
MeanStd mean_std(const std::vector<double>& v);

}  // namespace nrdq::harness
