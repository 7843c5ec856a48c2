#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pgbias/mdp/tabular_mdp.hpp"

namespace pgbias {

struct PcaResult {
  Table projected;   ///< n x 2
  Table components;  ///< 2 x dim, unit rows
  std::array<double, 2> explained{};
  std::vector<double> mean;
};

/// Top two principal components of the centered sample covariance by power
/// iteration with deflation. Throws Degenerate when every row is identical.
PcaResult pca_2d(const Table& features);

/// Projects rows onto the fitted components (after removing the fitted mean).
Table pca_project(const PcaResult& pca, const Table& features);

/// Pearson correlation of each projected axis with the actions.
std::pair<double, double> action_correlation(const Table& projected, std::span<const double> actions);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace pgbias
