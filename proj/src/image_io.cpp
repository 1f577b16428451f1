#include "nrdq/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include <fmt/format.h>

namespace nrdq {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::ranges::transform(ext, ext.begin(),
                         [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// --- Netpbm ---------------------------------------------------------------

int read_header_int(std::istream& in) {
  int c = in.peek();
  while (in && (std::isspace(c) || c == '#')) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else {
      in.get();
    }
    c = in.peek();
  }
  int value = 0;
  if (!(in >> value)) throw Error("unexpected end of stream");
  return value;
}

Image load_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw Error(fmt::format("'{}': unsupported netpbm variant", path.string()));
  }
  const int channels = magic[1] == '5' ? 1 : 3;
  const int width = read_header_int(in);
  const int height = read_header_int(in);
  const int maxval = read_header_int(in);
  if (width <= 0 || height <= 0) {
    throw Error(fmt::format("'{}': zero-dimension image", path.string()));
  }
  if (maxval <= 0 || maxval > 65535) {
    throw Error(fmt::format("'{}': invalid maxval {}", path.string(), maxval));
  }
  in.get();  // single whitespace byte after maxval

  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> raw(count * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error("unexpected end of stream");
  }

  Image img(width, height, channels);
  const float scale = 255.0f / static_cast<float>(maxval);
  const std::size_t plane = img.plane_size();
  auto dst = img.data();
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes_per_sample == 2
                           ? (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1]
                           : raw[i];
    // interleaved on disk, planar in memory
    const std::size_t pixel = i / channels;
    const std::size_t c = i % channels;
    dst[c * plane + pixel] = maxval == 255 ? float(v) : float(v) * scale;
  }
  return img;
}

std::vector<unsigned char> interleave_8bit(const Image& img) {
  const std::size_t plane = img.plane_size();
  const int channels = img.channels();
  std::vector<unsigned char> out(plane * channels);
  auto src = img.data();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < channels; ++c) {
      const float v = std::clamp(std::nearbyint(src[c * plane + p]), 0.0f, 255.0f);
      out[p * channels + c] = static_cast<unsigned char>(v);
    }
  }
  return out;
}

void save_netpbm(const Image& img, const std::filesystem::path& path,
                 int channels) {
  if (img.channels() != channels) {
    throw Error(fmt::format("'{}': {} expects {} channel(s), image has {}",
                            path.string(), lower_extension(path), channels,
                            img.channels()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << (channels == 1 ? "P5" : "P6") << '\n'
      << img.width() << ' ' << img.height() << "\n255\n";
  const auto bytes = interleave_8bit(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

// --- PNG ------------------------------------------------------------------

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp; the message is stashed here first.
struct PngErrorSink {
  std::jmp_buf jump;
  char message[256] = {0};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  std::longjmp(sink->jump, 1);
}
void png_warning_handler(png_structp, png_const_charp) {}

Image load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw Error(fmt::format("cannot open '{}'", path.string()));

  PngErrorSink sink;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink,
                                           png_error_handler,
                                           png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png: allocation failed");
  }

  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0, depth = 0;
  if (setjmp(sink.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(fmt::format("'{}': {}", path.string(), sink.message));
  }

  png_init_io(png, file.get());
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  if (width == 0 || height == 0) {
    throw Error(fmt::format("'{}': zero-dimension image", path.string()));
  }
  if (channels != 1 && channels != 3) {
    throw Error(fmt::format("'{}': unsupported channel layout", path.string()));
  }

  Image img(static_cast<int>(width), static_cast<int>(height), channels);
  auto dst = img.data();
  const std::size_t plane = img.plane_size();
  for (png_uint_32 y = 0; y < height; ++y) {
    const unsigned char* row = rows[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * channels + c;
        float v;
        if (depth == 16) {
          const unsigned s = row[2 * idx] | (unsigned(row[2 * idx + 1]) << 8);
          v = float(s) * (255.0f / 65535.0f);
        } else {
          v = row[idx];
        }
        dst[c * plane + static_cast<std::size_t>(y) * width + x] = v;
      }
    }
  }
  return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw Error(fmt::format("cannot write '{}'", path.string()));

  PngErrorSink sink;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink,
                                            png_error_handler,
                                            png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: allocation failed");
  }
  const std::vector<unsigned char> bytes = interleave_8bit(img);
  const std::size_t stride =
      static_cast<std::size_t>(img.width()) * img.channels();
  if (setjmp(sink.jump)) {
    png_destroy_write_struct(&png, &info);
    throw Error(fmt::format("'{}': {}", path.string(), sink.message));
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(fmt::format("cannot open '{}': no such file", path.string()));
  }
  unsigned char sig[8] = {0};
  {
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(sig), 8);
    if (in.gcount() < 2) throw Error("unexpected end of stream");
  }
  if (png_sig_cmp(sig, 0, 8) == 0) return load_png(path);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) {
    return load_netpbm(path);
  }
  throw Error(fmt::format("'{}': unsupported image format", path.string()));
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.empty()) throw Error("cannot save an empty image");
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw Error(fmt::format("cannot write '{}': directory does not exist",
                            path.string()));
  }
  const std::string ext = lower_extension(path);
  if (ext == ".pgm") return save_netpbm(img, path, 1);
  if (ext == ".ppm") return save_netpbm(img, path, 3);
  if (ext == ".png") return save_png(img, path);
  throw Error(fmt::format("'{}': unknown image extension", path.string()));
}

}  // namespace nrdq
