#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "nrdq/image.hpp"
#include "nrdq/rng.hpp"

namespace nrdq {

enum class NoiseKind { gaussian, poisson, salt_pepper };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view text);

/// A seeded corruption recipe. `level` is sigma for gaussian (in [0,255]
/// units), the scale k for poisson, and the density d for salt & pepper.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double level = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// "kind:level:seed"
  std::string to_string() const;
  static NoiseSpec parse(std::string_view text);

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

Image add_gaussian(const Image& img, double sigma, std::uint64_t seed);

/// k * Poisson(x / k) per sample.
Image add_poisson(const Image& img, double k, std::uint64_t seed);

/// Pixels are hit with probability d; a hit sets every channel of the pixel
/// to 0 or 255 with equal odds.
Image add_salt_pepper(const Image& img, double d, std::uint64_t seed);

Image apply_noise(const Image& img, const NoiseSpec& spec);

/// Poisson deviate: inversion below rate 30, Hormann's transformed
/// rejection (PTRS) above.
std::uint64_t sample_poisson(Rng& rng, double rate);

/// MAD estimate median(|horizontal forward differences|) / (0.6745 * sqrt 2).
double estimate_noise_sigma(const Image& img);

}  // namespace nrdq
