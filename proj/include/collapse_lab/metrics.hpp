#ifndef COLLAPSE_LAB_METRICS_HPP_
#define COLLAPSE_LAB_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <json.hpp>

#include "collapse_lab/embedding_set.hpp"
#include "collapse_lab/errors.hpp"

namespace collapse_lab {

namespace detail {

inline std::vector<double> mean_of_rows(const EmbeddingSet& u, std::size_t begin, std::size_t end) {
  std::vector<double> mean(u.dim(), 0.0);
  for (std::size_t r = begin; r < end; ++r) {
    const auto row = u.row(r);
    for (std::size_t c = 0; c < u.dim(); ++c) mean[c] += row[c];
  }
  const double count = static_cast<double>(end - begin);
  for (double& x : mean) x /= count;
  return mean;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace detail

/// Per-class means E[U_i].
inline std::vector<std::vector<double>> class_means(const EmbeddingSet& u) {
  std::vector<std::vector<double>> means;
  const std::size_t per_class = u.layout().rows_per_class();
  for (std::size_t i = 0; i < u.classes(); ++i)
    means.push_back(detail::mean_of_rows(u, i * per_class, (i + 1) * per_class));
  return means;
}

/// Var[U_i] = mean squared distance of class i's rows from their class mean.
inline std::vector<double> within_class_variance(const EmbeddingSet& u) {
  std::vector<double> out;
  const std::size_t per_class = u.layout().rows_per_class();
  const auto means = class_means(u);
  for (std::size_t i = 0; i < u.classes(); ++i) {
    double s = 0.0;
    for (std::size_t r = i * per_class; r < (i + 1) * per_class; ++r) s += detail::squared_distance(u.row(r), means[i]);
    out.push_back(s / static_cast<double>(per_class));
  }
  return out;
}

/// Size-weighted spread of the class means around the global mean,
/// sum_i |U_i|/|U| ||E[U_i] - E[U]||^2. Classes are equal-sized here, so the
/// weights are all 1/m.
inline double between_class_variance(const EmbeddingSet& u) {
  const auto means = class_means(u);
  const auto global = detail::mean_of_rows(u, 0, u.rows());
  const double weight = static_cast<double>(u.layout().rows_per_class()) / static_cast<double>(u.rows());
  double s = 0.0;
  for (const auto& mean : means) s += weight * detail::squared_distance(mean, global);
  return s;
}

/// Var[U] over all rows taken as one set.
inline double total_variance(const EmbeddingSet& u) {
  const auto global = detail::mean_of_rows(u, 0, u.rows());
  double s = 0.0;
  for (std::size_t r = 0; r < u.rows(); ++r) s += detail::squared_distance(u.row(r), global);
  return s / static_cast<double>(u.rows());
}

struct VarianceReport {
  std::vector<double> within_per_class;
  double avg_within = 0.0;
  double between = 0.0;
  double total_check = 0.0;    // avg_within + between
  double centroid_norm = 0.0;  // ||E[U]||
};

inline VarianceReport measure_variances(const EmbeddingSet& u) {
  VarianceReport report;
  report.within_per_class = within_class_variance(u);
  double s = 0.0;
  for (double v : report.within_per_class) s += v;
  report.avg_within = s / static_cast<double>(u.classes());
  report.between = between_class_variance(u);
  report.total_check = report.avg_within + report.between;
  report.centroid_norm = std::sqrt(detail::squared_norm(detail::mean_of_rows(u, 0, u.rows())));
  return report;
}

inline void to_json(nlohmann::json& j, const VarianceReport& r) {
  j = nlohmann::json{{"within_per_class", r.within_per_class},
                     {"avg_within", r.avg_within},
                     {"between", r.between},
                     {"total_check", r.total_check},
                     {"centroid_norm", r.centroid_norm}};
}

inline void from_json(const nlohmann::json& j, VarianceReport& r) {
  j.at("within_per_class").get_to(r.within_per_class);
  j.at("avg_within").get_to(r.avg_within);
  j.at("between").get_to(r.between);
  j.at("total_check").get_to(r.total_check);
  j.at("centroid_norm").get_to(r.centroid_norm);
}

/// Checks Var[U] = avg within + between (within tol) and avg within + between <= 1 + tol.
/// Meaningful for unit-norm rows only.
inline bool variance_identity_check(const EmbeddingSet& u, double tol) {
  const auto report = measure_variances(u);
  const double total = total_variance(u);
  return std::abs(total - report.total_check) <= tol && report.total_check <= 1.0 + tol;
}

/// (min inner product over distinct same-class rows) - (max inner product over cross-class rows).
inline double similarity_margin(const EmbeddingSet& u) {
  if (u.classes() < 2) throw DomainError("similarity_margin: needs m >= 2");
  if (u.layout().rows_per_class() < 2) throw DomainError("similarity_margin: classes need at least two rows");
  double min_same = std::numeric_limits<double>::infinity();
  double max_cross = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < u.rows(); ++a)
    for (std::size_t b = a + 1; b < u.rows(); ++b) {
      const double g = dot(u.row(a), u.row(b));
      if (u.class_of(a) == u.class_of(b))
        min_same = std::min(min_same, g);
      else
        max_cross = std::max(max_cross, g);
    }
  return min_same - max_cross;
}

namespace detail {

inline std::vector<std::vector<double>> instance_means(const EmbeddingSet& u) {
  std::vector<std::vector<double>> means;
  const std::size_t p = u.augmentations();
  for (std::size_t g = 0; g < u.classes() * u.instances(); ++g) means.push_back(mean_of_rows(u, g * p, (g + 1) * p));
  return means;
}

}  // namespace detail

/// sum over classes i and ordered instance pairs j != j' of E[U_ij]^T E[U_ij'].
inline double cross_instance_inner_sum(const EmbeddingSet& u) {
  const auto means = detail::instance_means(u);
  const std::size_t n = u.instances();
  double s = 0.0;
  for (std::size_t i = 0; i < u.classes(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t jj = 0; jj < n; ++jj)
        if (j != jj) s += dot(means[i * n + j], means[i * n + jj]);
  return s;
}

/// sum over classes i and ordered instance pairs j != j' of ||E[U_ij] - E[U_ij']||^2.
inline double instance_spread_sum(const EmbeddingSet& u) {
  const auto means = detail::instance_means(u);
  const std::size_t n = u.instances();
  double s = 0.0;
  for (std::size_t i = 0; i < u.classes(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t jj = 0; jj < n; ++jj)
        if (j != jj) s += detail::squared_distance(means[i * n + j], means[i * n + jj]);
  return s;
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_METRICS_HPP_
