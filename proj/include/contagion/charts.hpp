#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "contagion/run_record.hpp"

namespace contagion {

inline constexpr const char* kSeriesHeader =
    "t,rate,rel_equity,defaulted_frac,gamma";

// Series files: header plus one row per iteration at round-trip precision.
void write_series(std::ostream& out, const std::vector<SeriesPoint>& series);
void save_series(const std::filesystem::path& path,
                 const std::vector<SeriesPoint>& series);
std::vector<SeriesPoint> read_series(std::istream& in);
std::vector<SeriesPoint> load_series(const std::filesystem::path& path);

struct ChartCurve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Standalone SVG line chart.
std::string render_svg(const std::string& title, const std::string& y_label,
                       const std::vector<ChartCurve>& curves);

// The four panels, each drawn from series files: one curve per labelled
// file.
struct SeriesSource {
  std::string label;
  std::filesystem::path path;
};
inline constexpr const char* kPanelNames[] = {"rate", "rel_equity",
                                              "defaulted_frac", "gamma"};

// Writes <dir>/<panel>.svg for every panel and returns the written paths.
std::vector<std::filesystem::path> write_panel_charts(
    const std::filesystem::path& dir, const std::vector<SeriesSource>& sources);

}  // namespace contagion
