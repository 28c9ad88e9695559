#pragma once

#include <string>
#include <vector>

namespace ibg {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ChartSeries>& series);

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& labels,
                          const std::vector<double>& values);

// kind: curves | faithfulness | sweep | dim_importance | dim_frequency | dim_masking
std::string render_chart(const std::string& kind, const std::string& csv_text);

}  // namespace ibg
