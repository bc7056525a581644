#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "versa/core/bytes.hpp"
#include "versa/core/events.hpp"

namespace versa::browser {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster with clipped drawing primitives and an 8x16 bitmap font.
class Canvas {
 public:
  Canvas(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb pixel(int x, int y) const;
  void set(int x, int y, Rgb c);

  void fill_rect(int x, int y, int w, int h, Rgb c);
  void stroke_rect(int x, int y, int w, int h, Rgb c, int thickness = 1);
  // ASCII only; other code points draw as '?'. Returns the advance in pixels.
  int draw_text(int x, int y, std::string_view text, Rgb c);

  Bytes encode_png() const;
  // Throws std::runtime_error on anything but a valid PNG.
  static Canvas decode_png(const Bytes& png);

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> px_;
};

inline constexpr int kGlyphWidth = 8;
inline constexpr int kGlyphHeight = 16;

// Colour used for the n-th mark.
Rgb mark_color(std::size_t index);

// Draws each element's box and a bid label onto the image. Only elements
// that are visible and in the viewport are drawn; element i gets
// mark_color(i) where i counts drawn elements.
void draw_marks(Canvas& canvas, const std::vector<events::MarkedElement>& elements);

}  // namespace versa::browser
