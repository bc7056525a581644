#include "versa/browser/canvas.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "versa/core/assets.hpp"

namespace versa::browser {

namespace {

using Glyph = std::array<std::uint8_t, kGlyphHeight>;

const std::array<Glyph, 95>& font() {
  static std::array<Glyph, 95> glyphs{};
  static std::once_flag once;
  std::call_once(once, [] {
    std::istringstream in(assets::load("browser/font8x16.txt"));
    int code = 0;
    std::string hex;
    while (in >> code >> hex) {
      if (code < 32 || code > 126 || hex.size() != kGlyphHeight * 2) continue;
      Glyph& g = glyphs[static_cast<std::size_t>(code - 32)];
      for (int row = 0; row < kGlyphHeight; ++row) {
        g[static_cast<std::size_t>(row)] =
            static_cast<std::uint8_t>(std::stoi(hex.substr(static_cast<std::size_t>(row) * 2, 2), nullptr, 16));
      }
    }
  });
  return glyphs;
}

constexpr std::array<Rgb, 8> kPalette{{
    {230, 25, 75},
    {0, 130, 200},
    {60, 180, 75},
    {245, 130, 48},
    {145, 30, 180},
    {0, 128, 128},
    {240, 50, 230},
    {128, 0, 0},
}};

}  // namespace

Canvas::Canvas(int width, int height, Rgb background) : width_(width), height_(height) {
  if (width <= 0 || height <= 0 || width > 16384 || height > 16384) {
    throw std::invalid_argument("canvas size out of range");
  }
  px_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < px_.size(); i += 3) {
    px_[i] = background.r;
    px_[i + 1] = background.g;
    px_[i + 2] = background.b;
  }
}

Rgb Canvas::pixel(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("pixel outside canvas");
  std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  return {px_[i], px_[i + 1], px_[i + 2]};
}

void Canvas::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  px_[i] = c.r;
  px_[i + 1] = c.g;
  px_[i + 2] = c.b;
}

void Canvas::fill_rect(int x, int y, int w, int h, Rgb c) {
  int x0 = std::max(0, x);
  int y0 = std::max(0, y);
  int x1 = std::min(width_, x + w);
  int y1 = std::min(height_, y + h);
  for (int yy = y0; yy < y1; ++yy) {
    for (int xx = x0; xx < x1; ++xx) set(xx, yy, c);
  }
}

void Canvas::stroke_rect(int x, int y, int w, int h, Rgb c, int t) {
  if (w <= 0 || h <= 0) return;
  t = std::max(1, std::min({t, w, h}));
  fill_rect(x, y, w, t, c);
  fill_rect(x, y + h - t, w, t, c);
  fill_rect(x, y, t, h, c);
  fill_rect(x + w - t, y, t, h, c);
}

int Canvas::draw_text(int x, int y, std::string_view text, Rgb c) {
  const auto& glyphs = font();
  int cx = x;
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char ch = static_cast<unsigned char>(text[i]);
    if (ch >= 0x80) {
      while (i + 1 < text.size() && (static_cast<unsigned char>(text[i + 1]) & 0xC0) == 0x80) ++i;
      ch = '?';
    }
    if (ch < 32 || ch > 126) ch = '?';
    const Glyph& g = glyphs[ch - 32];
    if (cx < width_ && cx + kGlyphWidth > 0) {
      for (int row = 0; row < kGlyphHeight; ++row) {
        std::uint8_t bits = g[static_cast<std::size_t>(row)];
        for (int col = 0; col < kGlyphWidth; ++col) {
          if (bits & (0x80 >> col)) set(cx + col, y + row, c);
        }
      }
    }
    cx += kGlyphWidth;
  }
  return cx - x;
}

Bytes Canvas::encode_png() const {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png encode failed: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png encode failed: out of memory");
  }
  Bytes out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png encode failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* buf = static_cast<Bytes*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width_) * 3;
  for (int y = 0; y < height_; ++y) {
    png_write_row(png, const_cast<png_bytep>(px_.data() + static_cast<std::size_t>(y) * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Canvas Canvas::decode_png(const Bytes& png) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
    throw std::runtime_error(std::string("png decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  Canvas c(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, c.px_.data(), 0, nullptr)) {
    png_image_free(&image);
    throw std::runtime_error(std::string("png decode failed: ") + image.message);
  }
  return c;
}

Rgb mark_color(std::size_t index) { return kPalette[index % kPalette.size()]; }

void draw_marks(Canvas& canvas, const std::vector<events::MarkedElement>& elements) {
  std::size_t n = 0;
  for (const auto& e : elements) {
    if (!e.visible || !e.in_viewport || !e.bbox.has_area()) continue;
    Rgb color = mark_color(n++);
    int x = static_cast<int>(e.bbox.x);
    int y = static_cast<int>(e.bbox.y);
    int w = std::max(1, static_cast<int>(e.bbox.width));
    int h = std::max(1, static_cast<int>(e.bbox.height));
    canvas.stroke_rect(x, y, w, h, color, 2);
    int label_w = static_cast<int>(e.bid.size()) * kGlyphWidth + 4;
    int label_h = kGlyphHeight;
    int ly = y - label_h >= 0 ? y - label_h : y;
    int lx = std::max(0, x);
    canvas.fill_rect(lx, ly, label_w, label_h, color);
    canvas.draw_text(lx + 2, ly, e.bid, {255, 255, 255});
  }
}

}  // namespace versa::browser
