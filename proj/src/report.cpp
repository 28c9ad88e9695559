#include "ibg/report.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/errors.hpp"
#include "ibg/format.hpp"

namespace ibg {

namespace {

constexpr double kW = 640, kH = 400;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
  double lo, hi;
};

Range nice_range(double lo, double hi) {
  if (!(hi > lo)) {
    hi = lo + 1.0;
    lo -= 1.0;
  }
  double pad = (hi - lo) * 0.08;
  return {lo - pad, hi + pad};
}

std::string num(double v) {
  // short fixed form for axis labels
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void open_svg(std::string& s, const std::string& title) {
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
       "viewBox=\"0 0 640 400\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
}

void axes(std::string& s, const Range& xr, const Range& yr, const std::string& x_label,
          const std::string& y_label) {
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kH - kBottom) + "\" x2=\"" + num(kW - kRight) +
       "\" y2=\"" + num(kH - kBottom) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
       num(kH - kBottom) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = i / 4.0;
    double xv = xr.lo + fx * (xr.hi - xr.lo);
    double px = kLeft + fx * (kW - kLeft - kRight);
    s += "<text x=\"" + num(px) + "\" y=\"" + num(kH - kBottom + 16) +
         "\" text-anchor=\"middle\">" + num(xv) + "</text>\n";
    double yv = yr.lo + fx * (yr.hi - yr.lo);
    double py = kH - kBottom - fx * (kH - kTop - kBottom);
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" +
         num(yv) + "</text>\n";
  }
  s += "<text x=\"" + num((kLeft + kW - kRight) / 2) + "\" y=\"" + num(kH - 10) +
       "\" text-anchor=\"middle\">" + x_label + "</text>\n";
  s += "<text x=\"16\" y=\"" + num((kTop + kH - kBottom) / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num((kTop + kH - kBottom) / 2) + ")\">" + y_label + "</text>\n";
}

std::string svg_close() { return "</svg>\n"; }

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<ChartSeries>& series) {
  if (series.empty()) throw ContractError("chart: no series");
  double xlo = series[0].x.empty() ? 0.0 : series[0].x[0], xhi = xlo;
  double ylo = 0.0, yhi = 0.0;
  bool first = true;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("chart: series x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xlo = xhi = s.x[i];
        ylo = yhi = s.y[i];
        first = false;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  Range xr = nice_range(xlo, xhi), yr = nice_range(ylo, yhi);
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kW - kLeft - kRight); };
  auto py = [&](double y) {
    return kH - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kH - kTop - kBottom);
  };
  std::string out;
  open_svg(out, title);
  axes(out, xr, yr, x_label, y_label);
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % 6];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" +
           pts + "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    out += "<text x=\"" + num(kW - kRight - 4) + "\" y=\"" + num(kTop + 16.0 * (si + 1)) +
           "\" text-anchor=\"end\" fill=\"" + color + "\">" + s.name + "</text>\n";
  }
  out += svg_close();
  return out;
}

std::string svg_bar_chart(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
  if (labels.size() != values.size()) throw DimensionError("chart: labels/values mismatch");
  if (values.empty()) throw ContractError("chart: no bars");
  double hi = *std::max_element(values.begin(), values.end());
  double lo = std::min(0.0, *std::min_element(values.begin(), values.end()));
  Range yr = nice_range(lo, hi);
  auto py = [&](double y) {
    return kH - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kH - kTop - kBottom);
  };
  double span = kW - kLeft - kRight;
  double step = span / static_cast<double>(values.size());
  double bw = step * 0.7;
  std::string out;
  open_svg(out, title);
  axes(out, {0.0, static_cast<double>(values.size())}, yr, "", y_label);
  bool dense = labels.size() > 24;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double x0 = kLeft + step * static_cast<double>(i) + (step - bw) / 2;
    double y0 = py(std::max(values[i], 0.0));
    double y1 = py(std::min(values[i], 0.0));
    out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(bw) +
           "\" height=\"" + num(std::max(0.5, y1 - y0)) + "\" fill=\"" + kColors[0] + "\"/>\n";
    if (!dense) {
      out += "<text x=\"" + num(x0 + bw / 2) + "\" y=\"" + num(kH - kBottom + 16) +
             "\" text-anchor=\"middle\">" + labels[i] + "</text>\n";
    }
  }
  out += svg_close();
  return out;
}

namespace {

double to_num(const std::string& s) {
  try {
    return std::stod(s);
  } catch (...) {
    throw ParseError("chart: expected a number, got '" + s + "'");
  }
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("chart: CSV lacks column '" + name + "'");
}

}  // namespace

std::string render_chart(const std::string& kind, const std::string& csv_text) {
  auto rows = parse_csv(csv_text);
  if (rows.size() < 2) throw ParseError("chart: CSV has no data rows");
  const auto& header = rows[0];
  auto col = [&](const std::string& name) { return column(header, name); };
  auto series_of = [&](const std::string& xc, const std::string& yc) {
    ChartSeries s;
    s.name = yc;
    std::size_t xi = col(xc), yi = col(yc);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != header.size()) continue;
      if (rows[r][xi].empty() || rows[r][yi].empty()) continue;
      s.x.push_back(to_num(rows[r][xi]));
      s.y.push_back(to_num(rows[r][yi]));
    }
    return s;
  };

  if (kind == "curves") {
    auto ce = series_of("epoch", "ce");
    auto kl = series_of("epoch", "kl");
    auto acc = series_of("epoch", "dev_acc");
    return svg_line_chart("training curves", "epoch", "value", {ce, kl, acc});
  }
  if (kind == "faithfulness") {
    auto curve = series_of("k", "acc_k");
    curve.name = "acc_k";
    return svg_line_chart("deletion curve (" + rows[1][column(header, "method")] + ")", "k",
                          "accuracy", {curve});
  }
  if (kind == "sweep") {
    auto acc = series_of("value", "acc");
    auto f1 = series_of("value", "macro_f1");
    auto aopc = series_of("value", "aopc");
    auto ph = series_of("value", "ph_acc");
    std::string axis = rows[1][column(header, "axis")];
    return svg_line_chart("sweep over " + axis, axis, "metric",
                          {acc, f1, aopc, ph});
  }
  if (kind == "faithfulness_bars") {
    // one AOPC and one Ph-Acc bar per method; rows may be concatenated from
    // several per-method files sharing the header
    std::size_t mi = col("method"), ai = col("aopc"), pi = col("ph_acc");
    std::vector<std::string> labels;
    std::vector<double> values;
    std::string last_method;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != header.size() || rows[r][mi] == "method") continue;
      if (rows[r][mi] == last_method) continue;
      last_method = rows[r][mi];
      labels.push_back(rows[r][mi] + " aopc");
      values.push_back(to_num(rows[r][ai]));
      labels.push_back(rows[r][mi] + " ph");
      values.push_back(to_num(rows[r][pi]));
    }
    return svg_bar_chart("deletion metrics by method", "percent", labels, values);
  }
  if (kind == "dim_importance" || kind == "dim_frequency") {
    bool freq = kind == "dim_frequency";
    std::size_t di = col("dim_index");
    std::size_t vi = col(freq ? "frequency" : "mean_importance");
    std::vector<std::string> labels;
    std::vector<double> values;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != header.size()) continue;
      labels.push_back(rows[r][di]);
      values.push_back(to_num(rows[r][vi]));
    }
    return svg_bar_chart(freq ? "top-K membership frequency per dimension"
                              : "mean |grad x input| per dimension",
                         freq ? "frequency" : "importance", labels, values);
  }
  if (kind == "dim_masking") {
    auto curve = series_of("k", "masked_accuracy");
    return svg_line_chart("accuracy with top-k dimensions kept", "k", "accuracy", {curve});
  }
  throw ConfigError("chart: unknown kind '" + kind + "'");
}

}  // namespace ibg
