#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "arable/grid.hpp"

namespace arable {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB image, row-major, row 0 on top.
struct Image {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(std::size_t w, std::size_t h, Rgb fill = {255, 255, 255});
  Rgb get(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, Rgb c);
  void fill_rect(long x0, long y0, long x1, long y1, Rgb c);  // half-open, clipped
  void line(long x0, long y0, long x1, long y1, Rgb c);
  // 5x7 glyphs scaled by `scale`; unsupported characters render as blanks.
  void text(long x, long y, const std::string& s, Rgb c, int scale = 1);
};

void write_png(const Image& img, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

inline constexpr Rgb kNodataColor{200, 200, 200};

// Blue (-1) through white (0) to red (+1), clamped to [-1, 1].
Rgb diverging_color(double v);
// White (0) to dark green (1), clamped to [0, 1].
Rgb sequential_color(double v);
Rgb class_color(int cls);

// One pixel block of size `scale` per raster cell; nodata is grey.
Image render_delta(const Raster& delta, int scale = 2);
Image render_probability(const Raster& p, int scale = 2);
Image render_classes(const Raster& mask, int scale = 2);

// Horizontal bars, one per entry, red for positive and blue for negative.
Image bar_chart(const std::vector<std::pair<std::string, double>>& entries,
                const std::string& title);

struct LineSeries {
  std::string name;
  std::vector<double> y;
};

// Series share the x labels; each gets its own colour and a legend entry.
Image line_chart(const std::vector<std::string>& x_labels, const std::vector<LineSeries>& series,
                 const std::string& title);

}  // namespace arable
