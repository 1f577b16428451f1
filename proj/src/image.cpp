#include "nrdq/image.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace nrdq {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0) {
    throw Error(fmt::format("image dimensions must be positive, got {}x{}",
                            width, height));
  }
  if (channels != 1 && channels != 3) {
    throw Error(fmt::format("unsupported channel count {}", channels));
  }
  data_.assign(plane_size() * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : Image(width, height, channels) {
  if (data.size() != data_.size()) {
    throw Error(fmt::format("sample count {} does not match {}x{}x{}",
                            data.size(), width, height, channels));
  }
  data_ = std::move(data);
}

Image Image::channel(int c) const {
  if (c < 0 || c >= channels_) throw Error("channel index out of range");
  auto src = plane(c);
  return Image(width_, height_, 1, std::vector<float>(src.begin(), src.end()));
}

Image Image::merge(std::span<const Image> planes) {
  if (planes.size() != 1 && planes.size() != 3) {
    throw Error("merge expects 1 or 3 planes");
  }
  const Image& first = planes.front();
  Image out(first.width(), first.height(), static_cast<int>(planes.size()));
  for (std::size_t c = 0; c < planes.size(); ++c) {
    if (planes[c].channels() != 1 || planes[c].width() != first.width() ||
        planes[c].height() != first.height()) {
      throw Error("merge planes must be single-channel and equally sized");
    }
    std::ranges::copy(planes[c].data(), out.plane(static_cast<int>(c)).begin());
  }
  return out;
}

Image Image::clamped() const {
  Image out = *this;
  for (float& v : out.data_) v = std::clamp(v, 0.0f, 255.0f);
  return out;
}

Image Image::quantized() const {
  Image out = *this;
  for (float& v : out.data_) v = std::clamp(std::nearbyint(v), 0.0f, 255.0f);
  return out;
}

void require_gray(const Image& img, const char* what) {
  if (img.channels() != 1) {
    throw Error(fmt::format("{} expects a 1-channel image, got {} channels",
                            what, img.channels()));
  }
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(fmt::format("{}: shape mismatch {}x{}x{} vs {}x{}x{}", what,
                            a.width(), a.height(), a.channels(), b.width(),
                            b.height(), b.channels()));
  }
}

Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw Error("to_grayscale expects 1 or 3 channels");
  Image out(img.width(), img.height(), 1);
  auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
  auto dst = out.plane(0);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
  }
  return out;
}

GradientField gradient_field(const Image& img) {
  require_gray(img, "gradient_field");
  const int w = img.width(), h = img.height();
  GradientField g;
  g.width = w;
  g.height = h;
  g.dx.assign(img.plane_size(), 0.0f);
  g.dy.assign(img.plane_size(), 0.0f);
  g.magnitude.assign(img.plane_size(), 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const float v = img.at(x, y);
      const float dx = x + 1 < w ? img.at(x + 1, y) - v : 0.0f;
      const float dy = y + 1 < h ? img.at(x, y + 1) - v : 0.0f;
      g.dx[i] = dx;
      g.dy[i] = dy;
      g.magnitude[i] = std::sqrt(dx * dx + dy * dy);
    }
  }
  return g;
}

PatchMatrix extract_patches(const Image& img, int k) {
  require_gray(img, "extract_patches");
  if (k <= 0) throw Error("patch side must be positive");
  if (img.width() < k || img.height() < k) {
    throw Error(fmt::format("image {}x{} is smaller than one {}x{} patch",
                            img.width(), img.height(), k, k));
  }
  PatchMatrix m;
  m.patch_side = k;
  m.patch_dim = k * k;
  m.tiles_x = img.width() / k;
  m.tiles_y = img.height() / k;
  m.count = m.tiles_x * m.tiles_y;
  m.values.reserve(static_cast<std::size_t>(m.count) * m.patch_dim);
  for (int ty = 0; ty < m.tiles_y; ++ty) {
    for (int tx = 0; tx < m.tiles_x; ++tx) {
      for (int px = 0; px < k; ++px) {
        for (int py = 0; py < k; ++py) {
          m.values.push_back(img.at(tx * k + px, ty * k + py));
        }
      }
    }
  }
  return m;
}

Image assemble_patches(const PatchMatrix& m) {
  const int k = m.patch_side;
  Image out(m.tiles_x * k, m.tiles_y * k, 1);
  for (int ty = 0; ty < m.tiles_y; ++ty) {
    for (int tx = 0; tx < m.tiles_x; ++tx) {
      auto col = m.column(ty * m.tiles_x + tx);
      for (int px = 0; px < k; ++px) {
        for (int py = 0; py < k; ++py) {
          out.at(tx * k + px, ty * k + py) =
              static_cast<float>(col[static_cast<std::size_t>(px) * k + py]);
        }
      }
    }
  }
  return out;
}

Image noise_map(const Image& noisy, const Image& denoised) {
  require_same_shape(noisy, denoised, "noise_map");
  Image out(noisy.width(), noisy.height(), noisy.channels());
  auto a = noisy.data();
  auto b = denoised.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = b[i] - a[i];
  return out;
}

}  // namespace nrdq
