#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cams {

// A numeric CSV as written by the harness: first column is the x axis.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

// One curve per learner parsed from "<learner>_mean[,_lo,_hi]" columns.
struct PanelSeries {
  std::string learner;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> lo;  // empty without intervals
  std::vector<double> hi;
};

std::vector<PanelSeries> panel_series(const CsvTable& table);

// Static line chart: mean lines plus shaded 90% bands when present.
std::string render_svg(const std::vector<PanelSeries>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label);

// Panels the report command knows about: file stem, title, axis labels.
struct PanelInfo {
  std::string stem;
  std::string title;
  std::string x_label;
  std::string y_label;
};

const std::vector<PanelInfo>& report_panels();

// Reads every known panel CSV in `report_dir` and writes plot_data.csv
// (long format: panel,x,learner,mean,lo,hi) plus one SVG per panel into
// `out_dir`. Returns the number of panels found.
std::size_t write_plot_data(const std::filesystem::path& report_dir, const std::filesystem::path& out_dir,
                            bool svg = true);

}  // namespace cams
