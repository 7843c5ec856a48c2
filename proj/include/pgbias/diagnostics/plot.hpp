#pragma once

#include <string>
#include <vector>

#include "pgbias/mdp/tabular_mdp.hpp"

namespace pgbias {

/// Mean curve with a +-std band.
struct BandSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
};

std::string svg_band_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<BandSeries>& series);

/// Heatmap of grid(i, j) with i along x and j along y, both over `axis`.
std::string svg_heatmap(const std::string& title, const std::vector<double>& axis, const Table& grid);

/// Scatter of 2D points coloured by a scalar.
std::string svg_scatter(const std::string& title, const Table& points, const std::vector<double>& values);

/// Round-trip decimal form ("%.17g").
std::string format_double(double v);

}  // namespace pgbias
