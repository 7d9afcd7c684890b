#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace scevae {

struct PlotSeries {
  std::string label;
  std::vector<double> values;
  std::string color;  // empty picks from the palette
  bool dashed = false;
};

struct LinePlot {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  std::vector<PlotSeries> series;
};

struct BarGroup {
  std::string label;
  std::vector<double> values;  // one per bar category
  std::vector<double> errors;  // optional, same length as values
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<BarGroup> groups;
};

std::string render_svg(const LinePlot& plot, int width = 800, int height = 400);
std::string render_svg(const BarChart& chart, int width = 800, int height = 400);

void save_svg(const std::filesystem::path& path, const std::string& svg);

}  // namespace scevae
