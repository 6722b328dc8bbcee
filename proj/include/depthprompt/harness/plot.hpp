#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dp {

struct BarChart {
  std::string title;
  std::vector<std::string> group_labels;
  std::vector<std::pair<std::string, std::vector<double>>> series;
  std::string y_label = "RMSE (M)";
};

// Grouped bar chart rendered straight into an 8-bit RGB PNG with an embedded
// 5x7 font. Good enough for report plots; nothing interactive.
void write_bar_chart_png(const BarChart& chart,
                         const std::filesystem::path& path);

}  // namespace dp
