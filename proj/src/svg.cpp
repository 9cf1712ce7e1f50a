#include "promptlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace plab {

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, int decimals = 1) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(decimals);
  ss << v;
  return ss.str();
}

// White at 0 toward a saturated purple as |v| grows; negatives toward red.
std::string heat_color(double v, double v_max) {
  const double t = v_max > 0 ? std::clamp(std::fabs(v) / v_max, 0.0, 1.0) : 0.0;
  const int channel = static_cast<int>(245 - 185 * t);
  std::ostringstream ss;
  if (v >= 0) {
    ss << "rgb(" << channel << "," << channel << ",245)";
  } else {
    ss << "rgb(245," << channel << "," << channel << ")";
  }
  return ss.str();
}

}  // namespace

std::string svg_scatter(const std::vector<ScatterPoint>& points, const std::string& x_label,
                        const std::string& y_label, const std::string& title) {
  const int width = 640, height = 420;
  const int left = 70, right = 30, top = 50, bottom = 60;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  if (!points.empty()) {
    x_min = x_max = points[0].x;
    y_min = y_max = points[0].y;
    for (const auto& p : points) {
      x_min = std::min(x_min, p.x);
      x_max = std::max(x_max, p.x);
      y_min = std::min(y_min, p.y);
      y_max = std::max(y_max, p.y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  const double x_pad = 0.06 * (x_max - x_min), y_pad = 0.10 * (y_max - y_min);
  x_min -= x_pad; x_max += x_pad; y_min -= y_pad; y_max += y_pad;

  const auto sx = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
  };
  const auto sy = [&](double y) {
    return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\">\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
      << "\" height=\"" << height - top - bottom
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
      << height / 2 << ")\">" << escape_xml(y_label) << "</text>\n";
  for (const auto& p : points) {
    svg << "<circle cx=\"" << fmt(sx(p.x), 1) << "\" cy=\"" << fmt(sy(p.y), 1)
        << "\" r=\"5\" fill=\"#6a0dad\" fill-opacity=\"0.75\"/>\n";
    svg << "<text x=\"" << fmt(sx(p.x) + 8, 1) << "\" y=\"" << fmt(sy(p.y) + 4, 1)
        << "\" font-size=\"11\">" << escape_xml(p.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_delta_heatmap(const ResultGrid& grid) {
  const auto models = grid.models();
  const auto benchmarks = grid.benchmarks();
  std::vector<Method> methods;
  for (Method m : grid.methods()) {
    if (m != Method::HelmBaseline) methods.push_back(m);
  }

  const int cell_w = 66, cell_h = 24;
  const int label_w = 120, header_h = 48, block_gap = 36, title_h = 30;
  const int block_w = label_w + cell_w * static_cast<int>(methods.size());
  const int block_h = header_h + cell_h * static_cast<int>(benchmarks.size());
  const int width = 20 + block_w + 20;
  const int height =
      title_h + static_cast<int>(models.size()) * (block_h + block_gap);

  double v_max = 1.0;
  for (const auto& model : models) {
    for (const auto& benchmark : benchmarks) {
      const double base = grid.at(model, Method::HelmBaseline, benchmark).score_percent;
      for (Method method : methods) {
        v_max = std::max(v_max,
                         std::fabs(grid.at(model, method, benchmark).score_percent - base));
      }
    }
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << width / 2
      << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">Accuracy gain over baseline"
      << "</text>\n";
  int y0 = title_h;
  for (const auto& model : models) {
    svg << "<text x=\"20\" y=\"" << y0 + 16 << "\" font-size=\"13\">" << escape_xml(model)
        << "</text>\n";
    for (size_t c = 0; c < methods.size(); ++c) {
      svg << "<text x=\"" << 20 + label_w + static_cast<int>(c) * cell_w + cell_w / 2
          << "\" y=\"" << y0 + header_h - 8 << "\" text-anchor=\"middle\">"
          << escape_xml(method_name(methods[c])) << "</text>\n";
    }
    for (size_t r = 0; r < benchmarks.size(); ++r) {
      const int y = y0 + header_h + static_cast<int>(r) * cell_h;
      svg << "<text x=\"" << 20 + label_w - 6 << "\" y=\"" << y + cell_h - 8
          << "\" text-anchor=\"end\">" << escape_xml(benchmarks[r]) << "</text>\n";
      const double base =
          grid.at(model, Method::HelmBaseline, benchmarks[r]).score_percent;
      for (size_t c = 0; c < methods.size(); ++c) {
        const double delta =
            grid.at(model, methods[c], benchmarks[r]).score_percent - base;
        const int x = 20 + label_w + static_cast<int>(c) * cell_w;
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
            << "\" height=\"" << cell_h << "\" fill=\"" << heat_color(delta, v_max)
            << "\" stroke=\"#ccc\"/>\n";
        svg << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h - 8
            << "\" text-anchor=\"middle\">" << fmt(delta) << "</text>\n";
      }
    }
    y0 += block_h + block_gap;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace plab
