#include "jsi/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace jsi {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void check_image(const Tensor<double>& img, const std::filesystem::path& path) {
  const Shape s = img.shape();
  if (s.n != 1 || s.c != 3)
    throw std::invalid_argument(path.string() + ": expected a [1, 3, h, w] image, got " + s.str());
}

std::uint32_t code_of(double v, int bits) {
  const double top = static_cast<double>((1u << bits) - 1u);
  return static_cast<std::uint32_t>(std::floor(std::clamp(v, 0.0, 1.0) * top + 0.5));
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void write_png(const std::filesystem::path& path, const Tensor<double>& img, int bits) {
  check_image(img, path);
  if (bits < 1 || bits > 16) throw std::invalid_argument("write_png: unsupported bit depth");
  File f(std::fopen(path.string().c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng error writing " + path.string());
  }
  const int h = img.shape().h, w = img.shape().w;
  const int depth = bits <= 8 ? 8 : 16;
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, depth, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_color_8 sig{};
  sig.red = sig.green = sig.blue = static_cast<png_byte>(bits);
  png_set_sBIT(png, info, &sig);
  png_write_info(png, info);
  const int shift = depth - bits;
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 3 * (depth / 8));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const std::uint32_t v = code_of(img.at(0, c, y, x), bits) << shift;
        const std::size_t i = static_cast<std::size_t>(x) * 3 + c;
        if (depth == 8) {
          row[i] = static_cast<png_byte>(v);
        } else {
          row[2 * i] = static_cast<png_byte>(v >> 8);  // PNG samples are big-endian
          row[2 * i + 1] = static_cast<png_byte>(v & 0xff);
        }
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor<double> read_png(const std::filesystem::path& path, int* bits_out) {
  File f(std::fopen(path.string().c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw std::runtime_error(path.string() + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng error reading " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (depth < 8) png_set_expand(png);
  png_set_strip_alpha(png);
  int bits = depth < 8 ? 8 : depth;
  png_color_8p sbit = nullptr;
  if (depth == 16 && png_get_sBIT(png, info, &sbit) && sbit && sbit->red > 0 && sbit->red < 16)
    bits = sbit->red;
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  Tensor<double> img(Shape{1, 3, h, w});
  const int shift = out_depth - bits;
  const double top = static_cast<double>((1u << bits) - 1u);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * 3 + c;
        std::uint32_t v = out_depth == 8 ? row[i] : (row[2 * i] << 8) | row[2 * i + 1];
        img.at(0, c, y, x) = (v >> shift) / top;
      }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (bits_out) *bits_out = bits;
  return img;
}

void write_raw_yuv(const std::filesystem::path& path, const Tensor<double>& img, int bits,
                   YuvMatrix matrix) {
  check_image(img, path);
  if (bits < 1 || bits > 16) throw std::invalid_argument("write_raw_yuv: unsupported bit depth");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint32_t v = code_of(img[i], bits);
    if (bits <= 8) {
      out.put(static_cast<char>(v));
    } else {
      out.put(static_cast<char>(v & 0xff));
      out.put(static_cast<char>(v >> 8));
    }
  }
  nlohmann::json meta{{"width", img.shape().w},
                      {"height", img.shape().h},
                      {"bits", bits},
                      {"matrix", to_string(matrix)}};
  std::ofstream side(sidecar(path));
  side << meta.dump(2) << '\n';
  if (!out || !side) throw std::runtime_error("failed writing " + path.string());
}

Tensor<double> read_raw_yuv(const std::filesystem::path& path, RawYuvInfo* info_out) {
  std::ifstream side(sidecar(path));
  if (!side) throw std::runtime_error("missing sidecar " + sidecar(path).string());
  RawYuvInfo info;
  try {
    nlohmann::json meta;
    side >> meta;
    info.width = meta.at("width").get<int>();
    info.height = meta.at("height").get<int>();
    info.bits = meta.at("bits").get<int>();
    info.matrix = yuv_matrix_from_string(meta.at("matrix").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(sidecar(path).string() + ": " + e.what());
  }
  if (info.width < 1 || info.height < 1 || info.bits < 1 || info.bits > 16)
    throw std::runtime_error(sidecar(path).string() + ": invalid geometry");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Tensor<double> img(Shape{1, 3, info.height, info.width});
  const double top = static_cast<double>((1u << info.bits) - 1u);
  const int bytes = info.bits <= 8 ? 1 : 2;
  std::vector<unsigned char> buf(img.size() * bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error(path.string() + ": truncated raw YUV data");
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint32_t v = bytes == 1 ? buf[i] : buf[2 * i] | (buf[2 * i + 1] << 8);
    img[i] = v / top;
  }
  if (info_out) *info_out = info;
  return img;
}

Tensor<double> read_image(const std::filesystem::path& path, int* bits) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path, bits);
  RawYuvInfo info;
  Tensor<double> img = read_raw_yuv(path, &info);
  if (bits) *bits = info.bits;
  return img;
}

}  // namespace jsi
