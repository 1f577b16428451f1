#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nrdq {

/// Thrown for malformed inputs: shape mismatches, bad parameters, bad files.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar float raster with 1 or 3 channels. Samples normally live in
/// [0, 255]; the noise map is the one place where signed values appear.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);
  Image(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int x, int y, int c = 0) {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  float at(int x, int y, int c = 0) const {
    return data_[c * plane_size() + static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<float> plane(int c) {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<const float> plane(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  /// Single-channel copy of plane `c`.
  Image channel(int c) const;

  /// Stacks 1-channel planes into one image.
  static Image merge(std::span<const Image> planes);

  /// Copy clamped to [0, 255].
  Image clamped() const;

  /// Copy rounded to the nearest integer level and clamped, i.e. exactly
  /// what an 8-bit file would store.
  Image quantized() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<float> dx;
  std::vector<float> dy;
  std::vector<float> magnitude;
};

/// Vectorized k x k patches, one per column; column j occupies
/// values[j * patch_dim, (j + 1) * patch_dim).
struct PatchMatrix {
  int patch_side = 0;
  int patch_dim = 0;
  int count = 0;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<double> values;

  std::span<const double> column(int j) const {
    return {values.data() + static_cast<std::size_t>(j) * patch_dim,
            static_cast<std::size_t>(patch_dim)};
  }
};

/// Luminance 0.299 R + 0.587 G + 0.114 B; gray input passes through.
Image to_grayscale(const Image& img);

/// Forward differences; the last column has dx = 0, the last row dy = 0.
GradientField gradient_field(const Image& img);

/// Non-overlapping k x k tiles, row-major tile order, partial tiles dropped.
/// Each patch is vectorized column-major.
PatchMatrix extract_patches(const Image& img, int k);

/// Inverse of extract_patches over the covered region (tiles_x*k by
/// tiles_y*k). Used to check the tiling.
Image assemble_patches(const PatchMatrix& m);

/// denoised - noisy, unclamped.
Image noise_map(const Image& noisy, const Image& denoised);

/// Half-sample symmetric reflection of an index into [0, n).
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

void require_gray(const Image& img, const char* what);
void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace nrdq
