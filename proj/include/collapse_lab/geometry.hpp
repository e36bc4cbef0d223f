#ifndef COLLAPSE_LAB_GEOMETRY_HPP_
#define COLLAPSE_LAB_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "collapse_lab/embedding_set.hpp"
#include "collapse_lab/errors.hpp"

namespace collapse_lab {

/// Upper end of the admissible interpolation range, sqrt((mn-1)/(m(n-1))).
inline double max_delta(std::size_t m, std::size_t n) {
  if (m < 1) throw DomainError("max_delta: m must be >= 1");
  if (n < 2) throw DomainError("max_delta: n must be >= 2 (the range bound divides by n-1)");
  const double mn = static_cast<double>(m * n);
  return std::sqrt((mn - 1.0) / (static_cast<double>(m) * static_cast<double>(n - 1)));
}

/// One member of the simplex-to-simplex family: m classes, n instances per
/// class, p identical augmentations per instance, interpolation parameter delta.
struct SsemSpec {
  std::size_t m = 2;
  std::size_t n = 2;
  std::size_t p = 1;
  double delta = 0.0;

  Layout layout() const { return {m, n, p}; }

  /// Throws DomainError unless mn >= 2, p >= 1 and delta is admissible.
  void validate() const {
    if (m < 1 || n < 1 || p < 1) throw DomainError("SsemSpec: m, n, p must be positive");
    if (m * n < 2) throw DomainError("SsemSpec: need m*n >= 2");
    if (!std::isfinite(delta) || delta < 0.0) throw DomainError("SsemSpec: delta must be a finite value >= 0");
    if (n == 1) {
      if (delta != 0.0) throw DomainError("SsemSpec: with n = 1 the only admissible delta is 0");
      return;
    }
    const double hi = max_delta(m, n);
    if (delta > hi * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "SsemSpec: delta " << delta << " exceeds max_delta " << hi;
      throw DomainError(msg.str());
    }
  }

  /// delta^2 * mn/(mn-1), the reparameterization used by the closed-form loss.
  double delta_tilde() const {
    const double mn = static_cast<double>(m * n);
    return delta * delta * mn / (mn - 1.0);
  }

  /// Gram target for two rows of different instances in the same class.
  double same_class_target() const { return 1.0 - delta_tilde(); }

  /// Gram target for two rows in different classes (requires m >= 2).
  double cross_class_target() const {
    const double md = static_cast<double>(m);
    const double mn = static_cast<double>(m * n);
    return -1.0 / (md - 1.0) + delta * delta * md * static_cast<double>(n - 1) / ((md - 1.0) * (mn - 1.0));
  }
};

/// `count` unit vectors in R^dim with pairwise inner product -1/(count-1).
///
/// The centered standard basis of R^count is expressed in the Helmert basis of
/// the hyperplane orthogonal to the all-ones vector (which is what Gram-Schmidt
/// on the centered vectors yields), then zero-padded to `dim` coordinates.
inline EmbeddingSet simplex_etf(std::size_t count, std::size_t dim) {
  if (count < 2) throw DomainError("simplex_etf: count must be >= 2");
  if (dim < count - 1) {
    std::ostringstream msg;
    msg << "simplex_etf: dimension " << dim << " too small for " << count << " vectors (need >= " << count - 1 << ")";
    throw DimensionError(msg.str());
  }
  const double scale = std::sqrt(static_cast<double>(count) / static_cast<double>(count - 1));
  std::vector<double> data(count * dim, 0.0);
  for (std::size_t k = 1; k < count; ++k) {
    const double kd = static_cast<double>(k);
    const double norm = std::sqrt(kd * (kd + 1.0));
    for (std::size_t i = 0; i < k; ++i) data[i * dim + (k - 1)] = scale / norm;
    data[k * dim + (k - 1)] = -scale * kd / norm;
  }
  return EmbeddingSet({count, 1, 1}, dim, std::move(data));
}

namespace detail {

// Coefficient of the class sum in u_ij = delta*w_ij + h*sum_j' w_ij' ('+' branch).
inline double class_sum_coefficient(std::size_t m, std::size_t n, double delta) {
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double radicand = std::max(0.0, (delta * delta * md * (1.0 - nd) + (md * nd - 1.0)) / (md - 1.0));
  return -delta / nd + std::sqrt(radicand) / nd;
}

}  // namespace detail

/// Smallest embedding dimension accepted by build_ssem for `spec`.
inline std::size_t ssem_min_dim(const SsemSpec& spec) {
  // m = 1 places the class mean on an extra axis orthogonal to the n-point
  // simplex; only at delta = 1 does that axis drop out.
  if (spec.m == 1 && spec.delta < 1.0) return spec.n;
  return spec.m * spec.n - 1;
}

/// Constructs the (m, n, p, delta) simplex-to-simplex embedding set in R^dim.
inline EmbeddingSet build_ssem(const SsemSpec& spec, std::size_t dim) {
  spec.validate();
  if (dim < ssem_min_dim(spec)) {
    std::ostringstream msg;
    msg << "build_ssem: dimension " << dim << " below the required " << ssem_min_dim(spec)
        << "; no construction is available in that regime";
    throw DimensionError(msg.str());
  }
  const std::size_t m = spec.m, n = spec.n, p = spec.p;
  const EmbeddingSet etf = simplex_etf(m * n, dim);
  std::vector<double> data(m * n * p * dim, 0.0);
  std::vector<double> vec(dim);

  if (m == 1) {
    // Pairwise target 1 - delta^2 n/(n-1): shrink the n-simplex by delta and
    // lift along a unit axis orthogonal to it.
    const double lift = std::sqrt(std::max(0.0, 1.0 - spec.delta * spec.delta));
    for (std::size_t j = 0; j < n; ++j) {
      const auto w = etf.row(j);
      for (std::size_t c = 0; c < dim; ++c) vec[c] = spec.delta * w[c];
      if (lift > 0.0) vec[n - 1] += lift;
      for (std::size_t k = 0; k < p; ++k) std::copy(vec.begin(), vec.end(), data.begin() + ((j * p + k) * dim));
    }
    return EmbeddingSet(spec.layout(), dim, std::move(data));
  }

  const double h = detail::class_sum_coefficient(m, n, spec.delta);
  std::vector<double> class_sum(dim);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(class_sum.begin(), class_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto w = etf.row(i * n + j);
      for (std::size_t c = 0; c < dim; ++c) class_sum[c] += w[c];
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto w = etf.row(i * n + j);
      for (std::size_t c = 0; c < dim; ++c) vec[c] = spec.delta * w[c] + h * class_sum[c];
      for (std::size_t k = 0; k < p; ++k)
        std::copy(vec.begin(), vec.end(), data.begin() + (((i * n + j) * p + k) * dim));
    }
  }
  return EmbeddingSet(spec.layout(), dim, std::move(data));
}

/// Largest deviations of the empirical Gram matrix from the SSEM targets.
struct GramReport {
  double max_abs_residual = 0.0;
  double residual_same_instance = 0.0;  // includes the diagonal (norms)
  double residual_same_class = 0.0;
  double residual_cross_class = 0.0;
  bool passed = false;
};

inline GramReport gram_check(const EmbeddingSet& u, const SsemSpec& spec, double tol) {
  if (u.layout() != spec.layout()) throw ShapeError("gram_check: embedding set and spec disagree on (m, n, p)");
  spec.validate();
  const double same_class = spec.same_class_target();
  const double cross_class = spec.m >= 2 ? spec.cross_class_target() : 0.0;
  GramReport report;
  const std::size_t rows = u.rows();
  for (std::size_t a = 0; a < rows; ++a) {
    const auto ua = u.row(a);
    for (std::size_t b = a; b < rows; ++b) {
      const double g = dot(ua, u.row(b));
      if (u.instance_of(a) == u.instance_of(b)) {
        report.residual_same_instance = std::max(report.residual_same_instance, std::abs(g - 1.0));
      } else if (u.class_of(a) == u.class_of(b)) {
        report.residual_same_class = std::max(report.residual_same_class, std::abs(g - same_class));
      } else {
        report.residual_cross_class = std::max(report.residual_cross_class, std::abs(g - cross_class));
      }
    }
  }
  report.max_abs_residual =
      std::max({report.residual_same_instance, report.residual_same_class, report.residual_cross_class});
  report.passed = report.max_abs_residual <= tol;
  return report;
}

/// Mean of all rows.
inline std::vector<double> centroid(const EmbeddingSet& u) {
  std::vector<double> mean(u.dim(), 0.0);
  for (std::size_t r = 0; r < u.rows(); ++r) {
    const auto row = u.row(r);
    for (std::size_t c = 0; c < u.dim(); ++c) mean[c] += row[c];
  }
  for (double& x : mean) x /= static_cast<double>(u.rows());
  return mean;
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_GEOMETRY_HPP_
