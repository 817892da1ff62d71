// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace logo {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // same length as x
};

// Renders a PNG line chart with axes, ticks, and a legend. Series with no
// points are skipped; throws IoError when nothing is drawable or the file
// cannot be written.
void render_line_chart(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, int width = 960, int height = 560);

// Renders a PNG bar chart. `groups` names each cluster on the x axis;
// `series` holds one value per group under a shared legend label.
void render_bar_chart(const std::string& path, const std::string& title,
                      const std::vector<std::string>& groups,
                      const std::vector<Series>& series, int width = 960, int height = 560);

}  // namespace logo
