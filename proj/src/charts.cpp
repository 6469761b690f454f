#include "contagion/charts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "contagion/error.hpp"

namespace contagion {

void write_series(std::ostream& out, const std::vector<SeriesPoint>& series) {
  out << kSeriesHeader << '\n';
  for (const auto& p : series) {
    out << fmt::format("{},{},{},{},{}\n", p.t, p.rate, p.rel_equity,
                       p.defaulted_frac, p.gamma);
  }
}

void save_series(const std::filesystem::path& path,
                 const std::vector<SeriesPoint>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_series(out, series);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::vector<SeriesPoint> read_series(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader) {
    throw ParseError("series: bad header", 1, 0);
  }
  std::vector<SeriesPoint> series;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    double values[5] = {};
    std::size_t k = 0;
    while (std::getline(cells, cell, ',') && k < 5) {
      try {
        values[k] = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError(fmt::format("series: bad value '{}'", cell), row, k + 1);
      }
      ++k;
    }
    if (k != 5) throw ParseError("series: expected 5 fields", row, 0);
    series.push_back({static_cast<std::int64_t>(values[0]), values[1],
                      values[2], values[3], values[4]});
  }
  return series;
}

std::vector<SeriesPoint> load_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_series(in);
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::string& title, const std::string& y_label,
                       const std::vector<ChartCurve>& curves) {
  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.x.size(); ++k) {
      if (!std::isfinite(c.x[k]) || !std::isfinite(c.y[k])) continue;
      if (first) {
        x_min = x_max = c.x[k];
        y_min = y_max = c.y[k];
        first = false;
      }
      x_min = std::min(x_min, c.x[k]);
      x_max = std::max(x_max, c.x[k]);
      y_min = std::min(y_min, c.y[k]);
      y_max = std::max(y_max, c.y[k]);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1;
  if (y_max <= y_min) {
    y_max = y_min + (y_min == 0 ? 1 : std::abs(y_min) * 0.1);
  }
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" "
      "text-anchor=\"middle\">{3}</text>\n",
      kWidth, kHeight, kLeft + plot_w / 2, escape(title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      kLeft, kTop, plot_w, plot_h);
  for (int k = 0; k <= 4; ++k) {
    const double fx = x_min + (x_max - x_min) * k / 4.0;
    const double fy = y_min + (y_max - y_min) * k / 4.0;
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" "
        "font-size=\"11\" text-anchor=\"middle\">{:.4g}</text>\n",
        px(fx), kTop + plot_h + 16, fx);
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" "
        "font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n",
        kLeft - 6, py(fy) + 4, fy);
  }
  svg += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" "
      "font-size=\"12\" text-anchor=\"middle\">iteration t</text>\n",
      kLeft + plot_w / 2, kHeight - 12);
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"12\" "
      "text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1f})\">{}</text>\n",
      kTop + plot_h / 2, kTop + plot_h / 2, escape(y_label));

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % std::size(kPalette)];
    std::string points;
    for (std::size_t k = 0; k < curves[c].x.size(); ++k) {
      if (!std::isfinite(curves[c].x[k]) || !std::isfinite(curves[c].y[k])) continue;
      points += fmt::format("{:.2f},{:.2f} ", px(curves[c].x[k]), py(curves[c].y[k]));
    }
    svg += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" "
        "points=\"{}\"/>\n",
        color, points);
    const double ly = kTop + 14 + 18.0 * static_cast<double>(c);
    svg += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" "
        "stroke=\"{3}\" stroke-width=\"2\"/>\n"
        "<text x=\"{4:.1f}\" y=\"{5:.1f}\" font-family=\"sans-serif\" "
        "font-size=\"11\">{6}</text>\n",
        kLeft + plot_w + 10, ly, kLeft + plot_w + 30, color,
        kLeft + plot_w + 36, ly + 4, escape(curves[c].label));
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> write_panel_charts(
    const std::filesystem::path& dir, const std::vector<SeriesSource>& sources) {
  std::vector<std::vector<SeriesPoint>> data;
  for (const auto& s : sources) data.push_back(load_series(s.path));

  struct Panel {
    const char* name;
    const char* title;
    const char* y_label;
    double (*pick)(const SeriesPoint&);
  };
  const Panel panels[] = {
      {kPanelNames[0], "Interest rate", "r",
       [](const SeriesPoint& p) { return p.rate; }},
      {kPanelNames[1], "Total residual equity", "relative equity",
       [](const SeriesPoint& p) { return p.rel_equity; }},
      {kPanelNames[2], "Defaulted banks", "defaulted fraction",
       [](const SeriesPoint& p) { return p.defaulted_frac; }},
      {kPanelNames[3], "Depricing factor", "gamma",
       [](const SeriesPoint& p) { return p.gamma; }},
  };

  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& panel : panels) {
    std::vector<ChartCurve> curves;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      ChartCurve curve{sources[s].label, {}, {}};
      for (const auto& p : data[s]) {
        curve.x.push_back(static_cast<double>(p.t));
        curve.y.push_back(panel.pick(p));
      }
      curves.push_back(std::move(curve));
    }
    const auto path = dir / (std::string(panel.name) + ".svg");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << render_svg(panel.title, panel.y_label, curves);
    if (!out) throw Error("write failed for '" + path.string() + "'");
    written.push_back(path);
  }
  return written;
}

}  // namespace contagion
