#include "arable/render.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include <png.h>

#include "arable/error.hpp"

namespace arable {

Image::Image(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), rgb(w * h * 3) {
  for (std::size_t k = 0; k < w * h; ++k) {
    rgb[3 * k] = fill.r;
    rgb[3 * k + 1] = fill.g;
    rgb[3 * k + 2] = fill.b;
  }
}

Rgb Image::get(std::size_t x, std::size_t y) const {
  const std::size_t k = 3 * (y * width + x);
  return {rgb[k], rgb[k + 1], rgb[k + 2]};
}

void Image::set(std::size_t x, std::size_t y, Rgb c) {
  if (x >= width || y >= height) return;
  const std::size_t k = 3 * (y * width + x);
  rgb[k] = c.r;
  rgb[k + 1] = c.g;
  rgb[k + 2] = c.b;
}

void Image::fill_rect(long x0, long y0, long x1, long y1, Rgb c) {
  x0 = std::max(x0, 0L);
  y0 = std::max(y0, 0L);
  x1 = std::min(x1, static_cast<long>(width));
  y1 = std::min(y1, static_cast<long>(height));
  for (long y = y0; y < y1; ++y)
    for (long x = x0; x < x1; ++x) set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), c);
}

void Image::line(long x0, long y0, long x1, long y1, Rgb c) {
  const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    fill_rect(x0, y0, x0 + 2, y0 + 2, c);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

namespace {

// Column-major 5x7 glyphs, bit 0 at the top.
struct Glyph {
  char ch;
  std::array<std::uint8_t, 5> cols;
};

constexpr Glyph kFont[] = {
    {'0', {0x3E, 0x51, 0x49, 0x45, 0x3E}}, {'1', {0x00, 0x42, 0x7F, 0x40, 0x00}},
    {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4B, 0x31}},
    {'4', {0x18, 0x14, 0x12, 0x7F, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
    {'6', {0x3C, 0x4A, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
    {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1E}},
    {'A', {0x7E, 0x11, 0x11, 0x11, 0x7E}}, {'B', {0x7F, 0x49, 0x49, 0x49, 0x36}},
    {'C', {0x3E, 0x41, 0x41, 0x41, 0x22}}, {'D', {0x7F, 0x41, 0x41, 0x22, 0x1C}},
    {'E', {0x7F, 0x49, 0x49, 0x49, 0x41}}, {'F', {0x7F, 0x09, 0x09, 0x09, 0x01}},
    {'G', {0x3E, 0x41, 0x49, 0x49, 0x7A}}, {'H', {0x7F, 0x08, 0x08, 0x08, 0x7F}},
    {'I', {0x00, 0x41, 0x7F, 0x41, 0x00}}, {'J', {0x20, 0x40, 0x41, 0x3F, 0x01}},
    {'K', {0x7F, 0x08, 0x14, 0x22, 0x41}}, {'L', {0x7F, 0x40, 0x40, 0x40, 0x40}},
    {'M', {0x7F, 0x02, 0x0C, 0x02, 0x7F}}, {'N', {0x7F, 0x04, 0x08, 0x10, 0x7F}},
    {'O', {0x3E, 0x41, 0x41, 0x41, 0x3E}}, {'P', {0x7F, 0x09, 0x09, 0x09, 0x06}},
    {'Q', {0x3E, 0x41, 0x51, 0x21, 0x5E}}, {'R', {0x7F, 0x09, 0x19, 0x29, 0x46}},
    {'S', {0x46, 0x49, 0x49, 0x49, 0x31}}, {'T', {0x01, 0x01, 0x7F, 0x01, 0x01}},
    {'U', {0x3F, 0x40, 0x40, 0x40, 0x3F}}, {'V', {0x1F, 0x20, 0x40, 0x20, 0x1F}},
    {'W', {0x3F, 0x40, 0x38, 0x40, 0x3F}}, {'X', {0x63, 0x14, 0x08, 0x14, 0x63}},
    {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}}, {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}},
    {'-', {0x08, 0x08, 0x08, 0x08, 0x08}}, {'.', {0x00, 0x60, 0x60, 0x00, 0x00}},
    {'_', {0x40, 0x40, 0x40, 0x40, 0x40}}, {'/', {0x20, 0x10, 0x08, 0x04, 0x02}},
    {':', {0x00, 0x36, 0x36, 0x00, 0x00}}, {'+', {0x08, 0x08, 0x3E, 0x08, 0x08}},
    {'(', {0x00, 0x1C, 0x22, 0x41, 0x00}}, {')', {0x00, 0x41, 0x22, 0x1C, 0x00}},
};

const Glyph* find_glyph(char c) {
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont)
    if (g.ch == u) return &g;
  return nullptr;
}

constexpr long kGlyphAdvance = 6;

}  // namespace

void Image::text(long x, long y, const std::string& s, Rgb c, int scale) {
  for (char ch : s) {
    if (const Glyph* g = find_glyph(ch)) {
      for (long col = 0; col < 5; ++col)
        for (long row = 0; row < 7; ++row)
          if (g->cols[static_cast<std::size_t>(col)] & (1u << row))
            fill_rect(x + col * scale, y + row * scale, x + (col + 1) * scale,
                      y + (row + 1) * scale, c);
    }
    x += kGlyphAdvance * scale;
  }
}

void write_png(const Image& img, const std::filesystem::path& path) {
  if (img.width == 0 || img.height == 0) throw DataError("cannot write an empty image");
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&pi, path.string().c_str(), 0, img.rgb.data(), 0, nullptr))
    throw DataError("cannot write " + path.string() + ": " + pi.message);
}

Image read_png(const std::filesystem::path& path) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.string().c_str()))
    throw DataError("cannot read " + path.string() + ": " + pi.message);
  pi.format = PNG_FORMAT_RGB;
  Image img(pi.width, pi.height);
  if (!png_image_finish_read(&pi, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw DataError("cannot decode " + path.string() + ": " + pi.message);
  }
  return img;
}

namespace {

std::uint8_t channel(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

Rgb mix(Rgb a, Rgb b, double t) {
  return {channel(a.r + (b.r - a.r) * t), channel(a.g + (b.g - a.g) * t),
          channel(a.b + (b.b - a.b) * t)};
}

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kBlue{33, 102, 172};
constexpr Rgb kRed{178, 24, 43};
constexpr Rgb kGreen{0, 90, 50};

template <typename ColorFn>
Image render_raster(const Raster& r, int scale, ColorFn color) {
  if (scale < 1) throw ConfigError("render scale must be at least 1");
  const auto s = static_cast<std::size_t>(scale);
  Image img(r.width() * s, r.height() * s);
  for (std::size_t i = 0; i < r.height(); ++i)
    for (std::size_t j = 0; j < r.width(); ++j) {
      const double v = r.at(i, j);
      const Rgb c = r.is_nodata(v) ? kNodataColor : color(v);
      img.fill_rect(static_cast<long>(j * s), static_cast<long>(i * s),
                    static_cast<long>((j + 1) * s), static_cast<long>((i + 1) * s), c);
    }
  return img;
}

}  // namespace

Rgb diverging_color(double v) {
  if (std::isnan(v)) return kNodataColor;
  v = std::clamp(v, -1.0, 1.0);
  return v < 0 ? mix(kWhite, kBlue, -v) : mix(kWhite, kRed, v);
}

Rgb sequential_color(double v) {
  if (std::isnan(v)) return kNodataColor;
  return mix(kWhite, kGreen, std::clamp(v, 0.0, 1.0));
}

Rgb class_color(int cls) {
  static constexpr std::array<Rgb, 4> palette = {
      Rgb{235, 225, 200}, Rgb{31, 120, 180}, Rgb{166, 206, 227}, Rgb{51, 160, 44}};
  if (cls < 0 || cls >= static_cast<int>(palette.size())) return kNodataColor;
  return palette[static_cast<std::size_t>(cls)];
}

Image render_delta(const Raster& delta, int scale) {
  return render_raster(delta, scale, diverging_color);
}

Image render_probability(const Raster& p, int scale) {
  return render_raster(p, scale, sequential_color);
}

Image render_classes(const Raster& mask, int scale) {
  return render_raster(mask, scale, [](double v) { return class_color(static_cast<int>(v)); });
}

namespace {

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

Image bar_chart(const std::vector<std::pair<std::string, double>>& entries,
                const std::string& title) {
  std::size_t label_chars = 4;
  double vmax = 0.0;
  for (const auto& [name, v] : entries) {
    label_chars = std::max(label_chars, name.size());
    if (std::isfinite(v)) vmax = std::max(vmax, std::abs(v));
  }
  if (vmax == 0.0) vmax = 1.0;
  const long label_w = static_cast<long>(label_chars) * kGlyphAdvance + 10;
  const long bar_area = 400, row_h = 16, top = 30;
  const long width = label_w + bar_area + 70;
  const long height = top + row_h * static_cast<long>(entries.size()) + 20;
  Image img(static_cast<std::size_t>(width), static_cast<std::size_t>(height));
  img.text(8, 8, title, kBlack, 2);

  const long axis = label_w + bar_area / 2;
  img.fill_rect(axis, top - 4, axis + 1, height - 10, kBlack);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& [name, v] = entries[k];
    const long y = top + row_h * static_cast<long>(k);
    img.text(6, y + 3, name, kBlack);
    const double val = std::isfinite(v) ? v : 0.0;
    const long len = std::lround(std::abs(val) / vmax * static_cast<double>(bar_area / 2));
    if (val >= 0)
      img.fill_rect(axis + 1, y + 2, axis + 1 + len, y + row_h - 2, kRed);
    else
      img.fill_rect(axis - len, y + 2, axis, y + row_h - 2, kBlue);
    img.text(label_w + bar_area + 6, y + 3, short_number(v), kBlack);
  }
  return img;
}

Image line_chart(const std::vector<std::string>& x_labels, const std::vector<LineSeries>& series,
                 const std::string& title) {
  if (x_labels.empty()) throw DataError("line chart needs at least one x position");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    if (s.y.size() != x_labels.size()) throw DataError("line series '" + s.name + "' has the wrong length");
    for (double v : s.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi == lo) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const long left = 80, right = 180, top = 36, bottom = 40, plot_w = 480, plot_h = 300;
  Image img(static_cast<std::size_t>(left + plot_w + right),
            static_cast<std::size_t>(top + plot_h + bottom));
  img.text(8, 8, title, kBlack, 2);
  img.fill_rect(left, top, left + 1, top + plot_h, kBlack);
  img.fill_rect(left, top + plot_h, left + plot_w, top + plot_h + 1, kBlack);
  img.text(4, top, short_number(hi), kBlack);
  img.text(4, top + plot_h - 7, short_number(lo), kBlack);

  const auto n = static_cast<long>(x_labels.size());
  auto px = [&](long k) { return n == 1 ? left + plot_w / 2 : left + 10 + k * (plot_w - 20) / (n - 1); };
  auto py = [&](double v) {
    return top + plot_h - std::lround((v - lo) / (hi - lo) * static_cast<double>(plot_h));
  };
  for (long k = 0; k < n; ++k)
    img.text(px(k) - 12, top + plot_h + 8, x_labels[static_cast<std::size_t>(k)], kBlack);

  static constexpr std::array<Rgb, 6> colors = {Rgb{27, 158, 119}, Rgb{217, 95, 2},
                                                Rgb{117, 112, 179}, Rgb{231, 41, 138},
                                                Rgb{102, 166, 30}, Rgb{230, 171, 2}};
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Rgb c = colors[s % colors.size()];
    const auto& y = series[s].y;
    for (long k = 0; k < n; ++k) {
      img.fill_rect(px(k) - 3, py(y[static_cast<std::size_t>(k)]) - 3, px(k) + 4,
                    py(y[static_cast<std::size_t>(k)]) + 4, c);
      if (k > 0)
        img.line(px(k - 1), py(y[static_cast<std::size_t>(k - 1)]), px(k),
                 py(y[static_cast<std::size_t>(k)]), c);
    }
    const long ly = top + 10 + 14 * static_cast<long>(s);
    img.fill_rect(left + plot_w + 12, ly, left + plot_w + 22, ly + 7, c);
    img.text(left + plot_w + 28, ly, series[s].name, kBlack);
  }
  return img;
}

}  // namespace arable
