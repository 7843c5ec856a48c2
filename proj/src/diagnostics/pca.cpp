#include "pgbias/diagnostics/pca.hpp"

#include <algorithm>
#include <cmath>

#include "pgbias/errors.hpp"

namespace pgbias {
namespace {

constexpr std::size_t kMaxPowerIterations = 20000;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

// Removes the components along `basis` (unit vectors) from v.
void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double c = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
  }
}

std::vector<double> mat_vec(const Table& m, std::span<const double> v) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v);
  return out;
}

// Leading eigenvector of a symmetric PSD matrix restricted to the complement
// of `basis`.
std::vector<double> power_iteration(const Table& cov, const std::vector<std::vector<double>>& basis) {
  const std::size_t dim = cov.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < dim; ++i) scale = std::max(scale, cov(i, i));

  // Deterministic start that is unlikely to be orthogonal to anything.
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = 1.0 + 0.1 * static_cast<double>(i + 1) / static_cast<double>(dim);
  orthogonalize(v, basis);
  if (dot(v, v) < 1e-24) {
    // The start lies in span(basis); use the first coordinate axis left over.
    for (std::size_t i = 0; i < dim && dot(v, v) < 1e-24; ++i) {
      std::fill(v.begin(), v.end(), 0.0);
      v[i] = 1.0;
      orthogonalize(v, basis);
    }
  }
  normalize(v);

  for (std::size_t it = 0; it < kMaxPowerIterations; ++it) {
    auto w = mat_vec(cov, v);
    orthogonalize(w, basis);
    const double lambda = dot(v, w);
    const double norm = std::sqrt(dot(w, w));
    if (norm <= 1e-14 * scale) return v;  // null direction: any unit vector will do
    double residual = 0.0;
    for (std::size_t i = 0; i < dim; ++i) residual += (w[i] - lambda * v[i]) * (w[i] - lambda * v[i]);
    for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / norm;
    if (std::sqrt(residual) <= 1e-13 * scale) break;
  }
  orthogonalize(v, basis);
  normalize(v);
  return v;
}

}  // namespace

PcaResult pca_2d(const Table& features) {
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  require(n >= 2, ErrorKind::InvalidArgument, "pca_2d needs at least two rows");
  require(dim >= 2, ErrorKind::InvalidArgument, "pca_2d needs at least two feature columns");
  for (double x : features.data()) require(std::isfinite(x), ErrorKind::NonFinite, "pca_2d: non-finite feature");

  PcaResult out;
  out.mean.assign(dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) out.mean[c] += features(r, c);
  }
  for (double& m : out.mean) m /= static_cast<double>(n);

  Table cov(dim, dim);
  std::vector<double> centered(dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) centered[c] = features(r, c) - out.mean[c];
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = i; j < dim; ++j) cov(i, j) += centered[i] * centered[j];
    }
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      cov(i, j) /= static_cast<double>(n - 1);
      cov(j, i) = cov(i, j);
    }
    trace += cov(i, i);
  }
  require(trace > 0.0, ErrorKind::Degenerate, "pca_2d: every row is identical (rank-0 input)");

  // Deflation: the second component is the leading eigenvector of the
  // covariance restricted to the complement of the first.
  std::vector<std::vector<double>> basis;
  for (std::size_t k = 0; k < 2; ++k) basis.push_back(power_iteration(cov, basis));
  // One more Gram-Schmidt pass keeps the pair orthonormal to rounding.
  orthogonalize(basis[1], {basis[0]});
  normalize(basis[1]);

  out.components = Table(2, dim);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t c = 0; c < dim; ++c) out.components(k, c) = basis[k][c];
    out.explained[k] = std::max(0.0, dot(basis[k], mat_vec(cov, basis[k])));
  }
  out.projected = pca_project(out, features);
  return out;
}

Table pca_project(const PcaResult& pca, const Table& features) {
  require(features.cols() == pca.mean.size(), ErrorKind::InvalidArgument, "feature width does not match the PCA fit");
  Table out(features.rows(), 2);
  std::vector<double> centered(features.cols());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) centered[c] = features(r, c) - pca.mean[c];
    for (std::size_t k = 0; k < 2; ++k) out(r, k) = dot(centered, pca.components.row(k));
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::InvalidArgument, "pearson: length mismatch");
  require(x.size() >= 3, ErrorKind::InvalidArgument, "pearson needs at least three points");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  require(sxx > 0.0 && syy > 0.0, ErrorKind::Degenerate, "correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::pair<double, double> action_correlation(const Table& projected, std::span<const double> actions) {
  require(projected.cols() == 2, ErrorKind::InvalidArgument, "projected features must have two columns");
  require(projected.rows() == actions.size(), ErrorKind::InvalidArgument, "one action per projected row expected");
  std::vector<double> x(projected.rows()), y(projected.rows());
  for (std::size_t r = 0; r < projected.rows(); ++r) {
    x[r] = projected(r, 0);
    y[r] = projected(r, 1);
  }
  return {pearson(x, actions), pearson(y, actions)};
}

}  // namespace pgbias
