#include "fldplus/experiments/plot.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "fldplus/error.hpp"

namespace fldplus::experiments {

namespace {

constexpr std::array<const char*, 6> kColours = {"#1f77b4", "#d62728", "#2ca02c",
                                                  "#9467bd", "#ff7f0e", "#17becf"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(hi > lo)) {
      const double d = std::abs(lo) > 0 ? std::abs(lo) * 0.1 : 1.0;
      lo -= d;
      hi += d;
    } else {
      const double d = (hi - lo) * 0.05;
      lo -= d;
      hi += d;
    }
  }
};

std::string num(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string line_plot_svg(const std::vector<Series>& series, const PlotOptions& options) {
  require(!series.empty(), ErrorCode::kInvalidArgument, "plot needs at least one series");
  Range xr, yr;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size() && !s.x.empty(), ErrorCode::kInvalidArgument,
            "series '" + s.name + "' needs matching, non-empty x and y");
    require(s.y_err.empty() || s.y_err.size() == s.y.size(), ErrorCode::kInvalidArgument,
            "series '" + s.name + "' error bars do not match y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      require(std::isfinite(s.x[i]) && std::isfinite(s.y[i]), ErrorCode::kNonFinite,
              "series '" + s.name + "' has a non-finite point");
      require(!options.log_x || s.x[i] > 0, ErrorCode::kInvalidArgument,
              "log-scaled x needs positive values");
      xr.add(options.log_x ? std::log10(s.x[i]) : s.x[i]);
      const double e = s.y_err.empty() ? 0.0 : std::abs(s.y_err[i]);
      yr.add(s.y[i] - e);
      yr.add(s.y[i] + e);
    }
  }
  xr.pad();
  yr.pad();

  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = options.width - left - right, ph = options.height - top - bottom;
  auto sx = [&](double x) {
    const double v = options.log_x ? std::log10(x) : x;
    return left + (v - xr.lo) / (xr.hi - xr.lo) * pw;
  };
  auto sy = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      options.width, options.height, options.width, options.height);
  if (!options.metadata.empty()) svg += "<metadata>" + xml_escape(options.metadata) + "</metadata>\n";
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", options.width, options.height);
  svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     num(options.width / 2.0), xml_escape(options.title));
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
                     num(left), num(top), num(pw), num(ph));
  for (int t = 0; t <= 4; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
    const double xv = options.log_x ? std::pow(10.0, fx) : fx;
    const double px = left + pw * t / 4.0;
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333\"/>"
                       "<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4:.4g}</text>\n",
                       num(px), num(top + ph), num(top + ph + 5), num(top + ph + 19), xv);
    const double yv = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    const double py = top + ph - ph * t / 4.0;
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#333\"/>"
                       "<text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5:.4g}</text>\n",
                       num(left - 5), num(py), num(left), num(left - 8), num(py + 4), yv);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(left + pw / 2),
                     num(options.height - 12.0), xml_escape(options.x_label));
  svg += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                     num(top + ph / 2), xml_escape(options.y_label));

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kColours[k % kColours.size()];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) points += ' ';
      points += num(sx(s.x[i])) + "," + num(sy(s.y[i]));
    }
    svg += fmt::format("<g class=\"series\" data-name=\"{}\">\n", xml_escape(s.name));
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", colour, points);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!s.y_err.empty() && s.y_err[i] > 0) {
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\"/>\n",
                           num(sx(s.x[i])), num(sy(s.y[i] - s.y_err[i])), num(sy(s.y[i] + s.y_err[i])), colour);
      }
      svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{}\"/>\n", num(sx(s.x[i])),
                         num(sy(s.y[i])), colour);
    }
    svg += "</g>\n";
    svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", num(left + 10),
                       num(top + 16 + 15.0 * static_cast<double>(k)), colour, xml_escape(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  require(columns_ > 0, ErrorCode::kInvalidArgument, "CSV header is empty");
  row(header);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& fields) {
  require(fields.size() == columns_, ErrorCode::kInvalidArgument,
          fmt::format("CSV row has {} fields, header has {}", fields.size(), columns_));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += escape(fields[i]);
  }
  out_ += '\n';
  return *this;
}

std::string CsvWriter::number(double v) { return fmt::format("{}", v); }

std::string CsvWriter::escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace fldplus::experiments
