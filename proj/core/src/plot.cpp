#include "dpglab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "dpglab/csv.hpp"

namespace dpglab::plot {

namespace {

constexpr double kWidth = 840.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 650.0;
constexpr double kTop = 46.0;
constexpr double kBottom = 470.0;

const char* const kPalette[] = {
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

const char* const kMetricColumns[] = {
    "z_ma", "kl_p_pi", "kl_pi_a", "tvd", "var_grad", "var_adv", "mean_abs_adv", "distinct_1",
};
const char* const kKeyColumns[] = {
    "epoch", "samples_seen", "method", "seed", "batch_size", "variant", "mc_batch",
};

bool is_metric_column(const std::string& name) {
  for (const char* m : kMetricColumns) {
    if (name == m) return true;
  }
  return name.rfind("mean_phi_", 0) == 0;
}

bool is_key_column(const std::string& name) {
  for (const char* k : kKeyColumns) {
    if (name == k) return true;
  }
  return false;
}

std::string expected_columns_message() {
  std::string msg = "expected columns: ";
  bool first = true;
  for (const char* k : kKeyColumns) {
    if (!first) msg += ", ";
    msg += k;
    first = false;
  }
  for (const char* m : kMetricColumns) {
    msg += ", ";
    msg += m;
  }
  msg += ", mean_phi_<id>";
  return msg;
}

void append_fmt(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  out += buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  void widen() {
    if (!valid()) {
      lo = 0.0;
      hi = 1.0;
      return;
    }
    if (lo == hi) {
      const double pad = lo == 0.0 ? 1.0 : std::fabs(lo) * 0.1;
      lo -= pad;
      hi += pad;
      return;
    }
    const double pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
  }
};

double parse_cell(const std::string& cell) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) return std::numeric_limits<double>::quiet_NaN();
    return v;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::string file_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::vector<Series>& series) {
  Range xr;
  Range yr;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.y[i])) {
        xr.include(s.x[i]);
        yr.include(s.y[i]);
      }
    }
  }
  xr.widen();
  yr.widen();

  const auto sx = [&](double v) {
    return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * (kRight - kLeft);
  };
  const auto sy = [&](double v) {
    return kBottom - (v - yr.lo) / (yr.hi - yr.lo) * (kBottom - kTop);
  };

  std::string svg;
  append_fmt(svg,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
             "viewBox=\"0 0 %g %g\">\n",
             kWidth, kHeight, kWidth, kHeight);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  append_fmt(svg,
             "<text x=\"%g\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
             "text-anchor=\"middle\">%s</text>\n",
             (kLeft + kRight) / 2.0, escape_xml(title).c_str());

  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double px = sx(fx);
    const double py = sy(fy);
    append_fmt(svg,
               "<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"#dddddd\"/>\n",
               px, kTop, px, kBottom);
    append_fmt(svg,
               "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"#dddddd\"/>\n",
               kLeft, py, kRight, py);
    append_fmt(svg,
               "<text x=\"%.2f\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" "
               "text-anchor=\"middle\">%.4g</text>\n",
               px, kBottom + 18.0, fx);
    append_fmt(svg,
               "<text x=\"%g\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\" "
               "text-anchor=\"end\">%.4g</text>\n",
               kLeft - 8.0, py + 4.0, fy);
  }
  append_fmt(svg,
             "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
             "stroke=\"#333333\"/>\n",
             kLeft, kTop, kRight - kLeft, kBottom - kTop);
  append_fmt(svg,
             "<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"12\" "
             "text-anchor=\"middle\">%s</text>\n",
             (kLeft + kRight) / 2.0, kHeight - 10.0, escape_xml(x_label).c_str());

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::string points;
    const auto flush = [&] {
      if (!points.empty()) {
        append_fmt(svg,
                   "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" "
                   "points=\"%s\"/>\n",
                   color, points.c_str());
        points.clear();
      }
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      append_fmt(points, "%.2f,%.2f", sx(s.x[i]), sy(s.y[i]));
    }
    flush();

    const double ly = kTop + 8.0 + 18.0 * static_cast<double>(si);
    append_fmt(svg,
               "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"%s\" "
               "stroke-width=\"2\"/>\n",
               kRight + 12.0, ly, kRight + 34.0, ly, color);
    append_fmt(svg,
               "<text x=\"%g\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\">%s</text>\n",
               kRight + 40.0, ly + 4.0, escape_xml(s.label).c_str());
  }

  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> plot_csv_files(const std::vector<std::string>& csv_paths,
                                        const std::string& out_dir) {
  if (csv_paths.empty()) throw std::invalid_argument("plot: no input CSV files");

  struct Input {
    std::string stem;
    csv::Table table;
    int x_col = -1;
    std::string x_label;
    std::vector<int> group_cols;
  };
  std::vector<Input> inputs;
  std::vector<std::string> metric_order;

  for (const std::string& path : csv_paths) {
    Input in;
    in.table = csv::read_file(path);
    in.stem = file_stem(path);
    for (const std::string& col : in.table.header) {
      if (!is_key_column(col) && !is_metric_column(col)) {
        throw std::invalid_argument("plot: " + path + ": unknown column '" + col + "'; " +
                                    expected_columns_message());
      }
      if (is_metric_column(col) &&
          std::find(metric_order.begin(), metric_order.end(), col) == metric_order.end()) {
        metric_order.push_back(col);
      }
    }
    in.x_col = in.table.column("samples_seen");
    in.x_label = "samples_seen";
    if (in.x_col < 0) {
      in.x_col = in.table.column("epoch");
      in.x_label = "epoch";
    }
    for (const char* key : {"method", "variant", "seed", "batch_size"}) {
      const int c = in.table.column(key);
      if (c >= 0) in.group_cols.push_back(c);
    }
    inputs.push_back(std::move(in));
  }

  // Fixed metrics first, in canonical order, then any mean_phi columns in
  // first-seen order.
  std::vector<std::string> ordered;
  for (const char* m : kMetricColumns) {
    if (std::find(metric_order.begin(), metric_order.end(), m) != metric_order.end()) {
      ordered.push_back(m);
    }
  }
  for (const std::string& m : metric_order) {
    if (std::find(ordered.begin(), ordered.end(), m) == ordered.end()) ordered.push_back(m);
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (const std::string& metric : ordered) {
    std::vector<Series> series;
    for (const Input& in : inputs) {
      const int mcol = in.table.column(metric);
      if (mcol < 0) continue;
      // Group rows by the identifying columns, preserving first-seen order.
      std::vector<std::string> keys;
      std::vector<Series> groups;
      for (std::size_t r = 0; r < in.table.rows.size(); ++r) {
        const auto& row = in.table.rows[r];
        std::string key;
        for (int c : in.group_cols) {
          key += in.table.header[static_cast<std::size_t>(c)];
          key += '=';
          key += row[static_cast<std::size_t>(c)];
          key += ' ';
        }
        std::size_t gi = 0;
        for (; gi < keys.size(); ++gi) {
          if (keys[gi] == key) break;
        }
        if (gi == keys.size()) {
          keys.push_back(key);
          Series s;
          s.label = in.stem;
          if (!key.empty()) s.label += " " + key.substr(0, key.size() - 1);
          groups.push_back(std::move(s));
        }
        const double x = in.x_col >= 0 ? parse_cell(row[static_cast<std::size_t>(in.x_col)])
                                       : static_cast<double>(r);
        groups[gi].x.push_back(x);
        groups[gi].y.push_back(parse_cell(row[static_cast<std::size_t>(mcol)]));
      }
      for (Series& s : groups) series.push_back(std::move(s));
    }
    if (series.empty()) continue;
    const std::string x_label = inputs.front().x_label;
    const std::string svg = render_line_chart(metric, x_label, series);
    const std::string name = "plot_" + metric + ".svg";
    std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("plot: cannot write " + name);
    out << svg;
    written.push_back(name);
  }
  return written;
}

}  // namespace dpglab::plot
