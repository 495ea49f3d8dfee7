#include "cams/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cams/core.hpp"
#include "cams/format.hpp"

namespace cams {

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) table.header.push_back(tok);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        row.push_back(parse_real(tok));
      } catch (const std::invalid_argument& e) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (row.size() != table.header.size()) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": column count mismatch");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<PanelSeries> panel_series(const CsvTable& table) {
  std::vector<PanelSeries> out;
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const auto& h = table.header[c];
    if (!ends_with(h, "_mean")) continue;
    PanelSeries s;
    s.learner = h.substr(0, h.size() - 5);
    const bool banded = c + 2 < table.header.size() && table.header[c + 1] == s.learner + "_lo" &&
                        table.header[c + 2] == s.learner + "_hi";
    for (const auto& row : table.rows) {
      s.x.push_back(row[0]);
      s.mean.push_back(row[c]);
      if (banded) {
        s.lo.push_back(row[c + 1]);
        s.hi.push_back(row[c + 2]);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79"};

std::string fixed(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<PanelSeries>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
  constexpr double W = 640, H = 420, left = 70, right = 170, top = 40, bottom = 55;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double lo = s.lo.empty() ? s.mean[i] : s.lo[i];
      const double hi = s.hi.empty() ? s.mean[i] : s.hi[i];
      ymin = std::min({ymin, lo, s.mean[i]});
      ymax = std::max({ymax, hi, s.mean[i]});
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"15\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << fixed(top + ph + 16)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(xv) << "</text>\n";
    os << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(py(yv) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(yv) << "</text>\n";
  }
  os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(H - 12)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16 " << fixed(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"12\">" << escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.lo.empty()) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << fixed(px(s.x[i])) << ',' << fixed(py(s.hi[i])) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) os << fixed(px(s.x[i])) << ',' << fixed(py(s.lo[i])) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << fixed(px(s.x[i])) << ',' << fixed(py(s.mean[i])) << ' ';
    os << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << fixed(W - right + 12) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(W - right + 32)
       << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fixed(W - right + 38) << "\" y=\"" << fixed(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.learner) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

const std::vector<PanelInfo>& report_panels() {
  static const std::vector<PanelInfo> panels{
      {"cumulative_loss", "Cumulative loss", "round", "cumulative loss"},
      {"rcl", "Relative cumulative loss", "round", "RCL"},
      {"queries", "Query cost", "round", "queries"},
      {"sweep", "Cumulative loss vs. budget", "budget", "final cumulative loss"},
  };
  return panels;
}

std::size_t write_plot_data(const std::filesystem::path& report_dir, const std::filesystem::path& out_dir, bool svg) {
  if (!std::filesystem::is_directory(report_dir)) {
    throw ValidationError("report directory " + report_dir.string() + " does not exist");
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream long_out(out_dir / "plot_data.csv", std::ios::binary);
  if (!long_out) throw std::runtime_error("cannot write plot_data.csv");
  long_out << "panel,x,learner,mean,lo,hi\n";
  std::size_t found = 0;
  for (const auto& panel : report_panels()) {
    const auto path = report_dir / (panel.stem + ".csv");
    if (!std::filesystem::exists(path)) continue;
    ++found;
    const auto series = panel_series(read_csv(path));
    for (const auto& s : series) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        long_out << panel.stem << ',' << format_real(s.x[i]) << ',' << s.learner << ',' << format_real(s.mean[i]) << ','
                 << (s.lo.empty() ? "" : format_real(s.lo[i])) << ',' << (s.hi.empty() ? "" : format_real(s.hi[i]))
                 << '\n';
      }
    }
    if (svg) {
      std::ofstream svg_out(out_dir / (panel.stem + ".svg"), std::ios::binary);
      svg_out << render_svg(series, panel.title, panel.x_label, panel.y_label);
    }
  }
  if (found == 0) throw ValidationError("no report CSVs found in " + report_dir.string());
  return found;
}

}  // namespace cams
