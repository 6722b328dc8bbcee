#include "depthprompt/harness/plot.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

#include "depthprompt/raster_io.hpp"

namespace dp {
namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
const std::map<char, std::array<std::uint8_t, 7>> kFont = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'%', {0x19, 0x1A, 0x02, 0x04, 0x08, 0x0B, 0x13}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
};

struct Canvas {
  std::vector<Raster<float>> rgb;
  int height, width;

  Canvas(int h, int w)
      : rgb(3, Raster<float>::Constant(h, w, 1.0f)), height(h), width(w) {}

  void set(int r, int c, float red, float green, float blue) {
    if (r < 0 || r >= height || c < 0 || c >= width) return;
    rgb[0](r, c) = red;
    rgb[1](r, c) = green;
    rgb[2](r, c) = blue;
  }

  void fill(int r0, int c0, int r1, int c1, float red, float green, float blue) {
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c) set(r, c, red, green, blue);
  }

  void text(int r0, int c0, const std::string& s, float red = 0.1f,
            float green = 0.1f, float blue = 0.1f) {
    int c = c0;
    for (char raw : s) {
      char ch = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
      auto it = kFont.find(ch);
      const auto& glyph =
          it != kFont.end() ? it->second
                            : std::array<std::uint8_t, 7>{0x1F, 0x11, 0x11, 0x11,
                                                          0x11, 0x11, 0x1F};
      for (int gr = 0; gr < 7; ++gr)
        for (int gc = 0; gc < 5; ++gc)
          if (glyph[gr] & (1 << (4 - gc))) set(r0 + gr, c + gc, red, green, blue);
      c += 6;
    }
  }
};

const float kPalette[][3] = {
    {0.22f, 0.49f, 0.72f}, {0.89f, 0.47f, 0.21f}, {0.30f, 0.69f, 0.29f},
    {0.84f, 0.23f, 0.29f}, {0.58f, 0.40f, 0.74f}, {0.55f, 0.34f, 0.29f},
};

}  // namespace

void write_bar_chart_png(const BarChart& chart,
                         const std::filesystem::path& path) {
  const int n_groups = static_cast<int>(chart.group_labels.size());
  const int n_series = static_cast<int>(chart.series.size());
  const int bar_w = 12, bar_gap = 3, group_gap = 24;
  const int group_w = n_series * (bar_w + bar_gap) + group_gap;
  const int margin_left = 56, margin_right = 16;
  const int plot_h = 200;
  const int top = 28;
  const int legend_h = 14 * std::max(1, n_series);
  const int height = top + plot_h + 40 + legend_h;
  const int width =
      std::max(360, margin_left + n_groups * group_w + margin_right);

  Canvas cv(height, width);
  cv.text(8, margin_left, chart.title);

  double vmax = 1e-12;
  for (const auto& [name, vals] : chart.series)
    for (double v : vals) vmax = std::max(vmax, v);
  vmax *= 1.1;

  const int base = top + plot_h;
  // Axes and ticks.
  cv.fill(top, margin_left - 1, base + 1, margin_left, 0.2f, 0.2f, 0.2f);
  cv.fill(base, margin_left - 1, base + 1, width - margin_right, 0.2f, 0.2f, 0.2f);
  for (int t = 0; t <= 4; ++t) {
    const double v = vmax * t / 4.0;
    const int y = base - static_cast<int>(std::lround(plot_h * t / 4.0));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    cv.text(y - 3, 4, buf);
    if (t > 0)
      for (int c = margin_left; c < width - margin_right; c += 4)
        cv.set(y, c, 0.85f, 0.85f, 0.85f);
  }
  cv.text(top - 14, 4, chart.y_label);

  for (int g = 0; g < n_groups; ++g) {
    const int gx = margin_left + g * group_w + group_gap / 2;
    for (int s = 0; s < n_series; ++s) {
      const auto& vals = chart.series[s].second;
      const double v = g < static_cast<int>(vals.size()) ? vals[g] : 0.0;
      const int h = static_cast<int>(std::lround(plot_h * (v / vmax)));
      const auto& col = kPalette[s % 6];
      cv.fill(base - h, gx + s * (bar_w + bar_gap), base,
              gx + s * (bar_w + bar_gap) + bar_w, col[0], col[1], col[2]);
    }
    cv.text(base + 6, gx, chart.group_labels[g].substr(0, 12));
  }

  for (int s = 0; s < n_series; ++s) {
    const auto& col = kPalette[s % 6];
    const int y = base + 24 + s * 14;
    cv.fill(y, margin_left, y + 8, margin_left + 8, col[0], col[1], col[2]);
    cv.text(y, margin_left + 12, chart.series[s].first);
  }

  write_png_rgb8(cv.rgb, path);
}

}  // namespace dp
