#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nrdq/denoisers.hpp"
#include "nrdq/noise.hpp"

namespace nrdq::harness {

inline constexpr std::array<NoiseKind, 3> kNoiseKinds = {
    NoiseKind::gaussian, NoiseKind::poisson, NoiseKind::salt_pepper};

/// Benchmark levels per kind: sigma {10,20,30}, k {0.05,0.10,0.15},
/// d {0.1,0.2,0.3}. The intermediate set holds {15,25}, {0.075,0.125},
/// {0.15,0.25}.
std::vector<double> noise_levels(NoiseKind kind, bool intermediate = false);

/// True when `level` belongs to the intermediate set of its kind.
bool is_intermediate_level(NoiseKind kind, double level);

/// Seed for one noisy image, derived from the master seed, the clean id, the
/// noise kind and the level index.
std::uint64_t noise_seed(std::uint64_t master, std::string_view clean_id, NoiseKind kind,
                         int level_index);

struct ManifestRow {
  std::string clean_id;
  NoiseSpec noise;
  std::string noisy_path;  // relative to the manifest directory
  DenoiserId denoiser;
  std::string denoised_path;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string clean_dir;
  std::vector<ManifestRow> rows;
};

inline constexpr std::string_view kManifestColumns =
    "clean_id,noise_kind,noise_level,noise_seed,noisy_path,method,param,denoised_path,psnr,ssim";

std::string format_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);
void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Sorted image files (.png, .pgm, .ppm) directly inside `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct BenchmarkOptions {
  std::filesystem::path clean_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;
  int jobs = 1;
  /// Use only the intermediate noise levels instead of the benchmark ones.
  bool intermediate = false;
  /// Keep only the first n clean images (0 keeps all).
  int limit = 0;
  std::function<void(std::string_view)> log;
};

struct BenchmarkResult {
  Manifest manifest;
  int generated = 0;  // denoised rows computed in this run
  int reused = 0;     // rows verified from a previous run
  std::vector<std::string> failures;
};

/// Writes noisy/ and denoised/ PNGs, manifest.csv and a resume state file
/// into out_dir. Rows whose files already exist with matching content hashes
/// are reused. Per-file failures are logged and skipped.
BenchmarkResult build_benchmark(const BenchmarkOptions& opt);

}  // namespace nrdq::harness
