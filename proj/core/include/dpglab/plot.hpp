/* Static SVG line charts for run metrics.
 *
 * The renderer is deliberately tiny and fully deterministic: fixed canvas,
 * fixed palette, printf-formatted coordinates. Identical inputs produce
 * byte-identical SVG files, which lets tests hash the artifacts.
 *
 * plot_csv_files reads one or more metric CSVs (train, sweep or variance
 * outputs), groups rows into series by the identifying columns present
 * (method, variant, seed, batch_size), takes samples_seen as the x axis
 * when available (epoch otherwise), and writes one chart per metric column
 * into out_dir. A header outside the known set is an error that lists the
 * expected columns.
 */
#pragma once

#include <string>
#include <vector>

namespace dpglab::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // NaN breaks the polyline at that point
};

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::vector<Series>& series);

/* Returns the file names written (relative to out_dir), in deterministic
 * order. Throws std::invalid_argument on an unknown CSV header. */
std::vector<std::string> plot_csv_files(const std::vector<std::string>& csv_paths,
                                        const std::string& out_dir);

}  // namespace dpglab::plot
