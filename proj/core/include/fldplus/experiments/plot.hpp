#pragma once

#include <string>
#include <vector>

namespace fldplus::experiments {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_err;  // optional, same length as y
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  int width = 640;
  int height = 420;
  std::string metadata;  // e.g. provenance JSON, stored escaped in <metadata>
};

// Standalone SVG line chart: one polyline plus one <circle> marker per point
// for each series, axes with five ticks. Output depends only on the inputs.
std::string line_plot_svg(const std::vector<Series>& series, const PlotOptions& options);

// Minimal CSV: comma separated, '\n' line ends, fields quoted only when they
// contain a comma, quote or newline.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& row(const std::vector<std::string>& fields);
  const std::string& str() const noexcept { return out_; }

  static std::string number(double v);  // shortest round-trip text
  static std::string escape(const std::string& field);

 private:
  std::size_t columns_;
  std::string out_;
};

std::string xml_escape(const std::string& text);

}  // namespace fldplus::experiments
