#include "topocf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace topocf {

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

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string svg_degree_distribution(const std::map<Index, double>& distribution,
                                    const std::string& title) {
  const double width = 480, height = 360;
  const double left = 60, right = 20, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double min_d = 1.0, max_d = 1.0, min_p = 1.0, max_p = 1e-12;
  for (const auto& [d, p] : distribution) {
    if (d == 0 || p <= 0.0) continue;
    min_d = std::min(min_d, static_cast<double>(d));
    max_d = std::max(max_d, static_cast<double>(d));
    min_p = std::min(min_p, p);
    max_p = std::max(max_p, p);
  }
  const double lx0 = std::log10(std::max(1.0, min_d));
  const double lx1 = std::log10(std::max(min_d + 1.0, max_d));
  const double ly0 = std::log10(min_p) - 0.2;
  const double ly1 = std::log10(max_p) + 0.2;

  auto px = [&](double d) {
    return left + (std::log10(d) - lx0) / std::max(1e-9, lx1 - lx0) * plot_w;
  };
  auto py = [&](double p) {
    return top + plot_h - (std::log10(p) - ly0) / std::max(1e-9, ly1 - ly0) * plot_h;
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n";
  // Axes.
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\""
      << left + plot_w << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">d</text>\n";
  svg << "<text x=\"16\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << top + plot_h / 2 << ")\">P(d)</text>\n";
  // Decade ticks.
  for (int e = static_cast<int>(std::ceil(lx0)); e <= static_cast<int>(std::floor(lx1)); ++e) {
    const double x = px(std::pow(10.0, e));
    svg << "<line x1=\"" << x << "\" y1=\"" << top + plot_h << "\" x2=\"" << x
        << "\" y2=\"" << top + plot_h + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << top + plot_h + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"10\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(ly0)); e <= static_cast<int>(std::floor(ly1)); ++e) {
    const double y = py(std::pow(10.0, e));
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left
        << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << y + 3
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"10\">1e" << e << "</text>\n";
  }
  for (const auto& [d, p] : distribution) {
    if (d == 0 || p <= 0.0) continue;
    svg << "<circle cx=\"" << fmt(px(d)) << "\" cy=\"" << fmt(py(p))
        << "\" r=\"2.2\" fill=\"black\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_coefficient_bars(const std::vector<SignificanceRow>& rows,
                                 const std::string& title) {
  const double row_h = 26;
  const double left = 150, right = 60, top = 48, bottom = 24;
  const double plot_w = 420;
  const double height = top + bottom + row_h * static_cast<double>(rows.size());
  const double width = left + plot_w + right;

  double max_abs = 1e-12;
  for (const auto& r : rows) max_abs = std::max(max_abs, std::abs(r.coefficient));
  const double x_zero = left + plot_w / 2;
  const double scale = (plot_w / 2 - 8) / max_abs;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(title)
      << "</text>\n";
  svg << "<line x1=\"" << x_zero << "\" y1=\"" << top - 8 << "\" x2=\"" << x_zero
      << "\" y2=\"" << height - bottom << "\" stroke=\"#888\"/>\n";

  double y = top;
  for (const auto& r : rows) {
    // Darker bars carry higher significance.
    double opacity = 0.25;
    if (r.p_value < 0.001) {
      opacity = 1.0;
    } else if (r.p_value < 0.01) {
      opacity = 0.75;
    } else if (r.p_value < 0.05) {
      opacity = 0.5;
    }
    const double w = std::abs(r.coefficient) * scale;
    const double x = r.coefficient >= 0.0 ? x_zero : x_zero - w;
    const char* color = r.coefficient >= 0.0 ? "#1f77b4" : "#d62728";
    svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y + 4) << "\" width=\""
        << fmt(std::max(0.5, w)) << "\" height=\"" << row_h - 8
        << "\" fill=\"" << color << "\" fill-opacity=\"" << opacity << "\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << fmt(y + row_h / 2 + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << escape_xml(r.name) << "</text>\n";
    svg << "<text x=\"" << fmt(r.coefficient >= 0.0 ? x + w + 4 : x - 4)
        << "\" y=\"" << fmt(y + row_h / 2 + 4) << "\" text-anchor=\""
        << (r.coefficient >= 0.0 ? "start" : "end")
        << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt(r.coefficient) << escape_xml(r.stars) << "</text>\n";
    y += row_h;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace topocf
