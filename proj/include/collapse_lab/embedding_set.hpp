#ifndef COLLAPSE_LAB_EMBEDDING_SET_HPP_
#define COLLAPSE_LAB_EMBEDDING_SET_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "collapse_lab/errors.hpp"
#include "collapse_lab/io.hpp"

namespace collapse_lab {

/// Class / instance / augmentation counts of an embedding set.
struct Layout {
  std::size_t classes = 1;
  std::size_t instances = 1;      // per class
  std::size_t augmentations = 1;  // per instance

  std::size_t rows() const { return classes * instances * augmentations; }
  std::size_t rows_per_class() const { return instances * augmentations; }
  bool operator==(const Layout&) const = default;
};

/// The full set of m*n*p embedding vectors in R^d, stored row-major.
///
/// Row (i, j, k) lives at index (i*n + j)*p + k with zero-based indices. The
/// set is immutable once built. Unit norm is a property of the sets produced
/// by geometry and the trainer; the loss functions re-check it on input,
/// metrics deliberately do not.
class EmbeddingSet {
 public:
  EmbeddingSet(Layout layout, std::size_t dim, std::vector<double> data)
      : layout_(layout), dim_(dim), data_(std::move(data)) {
    if (layout_.classes == 0 || layout_.instances == 0 || layout_.augmentations == 0 || dim_ == 0)
      throw ShapeError("EmbeddingSet: m, n, p and d must all be positive");
    if (data_.size() != layout_.rows() * dim_) {
      std::ostringstream msg;
      msg << "EmbeddingSet: expected " << layout_.rows() << " x " << dim_ << " coordinates, got " << data_.size();
      throw ShapeError(msg.str());
    }
  }

  const Layout& layout() const { return layout_; }
  std::size_t classes() const { return layout_.classes; }
  std::size_t instances() const { return layout_.instances; }
  std::size_t augmentations() const { return layout_.augmentations; }
  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return layout_.rows(); }

  std::size_t index(std::size_t cls, std::size_t instance, std::size_t aug) const {
    return (cls * layout_.instances + instance) * layout_.augmentations + aug;
  }
  std::size_t class_of(std::size_t row) const { return row / layout_.rows_per_class(); }
  std::size_t instance_of(std::size_t row) const { return row / layout_.augmentations; }  // global instance id

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  std::span<const double> data() const { return data_; }

  /// Largest | ||row|| - 1 | over all rows.
  double max_norm_deviation() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < rows(); ++r) {
      double sq = 0.0;
      for (double x : row(r)) sq += x * x;
      worst = std::max(worst, std::abs(std::sqrt(sq) - 1.0));
    }
    return worst;
  }

  void require_unit_norm(double tol, const char* who) const {
    const double dev = max_norm_deviation();
    if (!(dev <= tol)) {
      std::ostringstream msg;
      msg << who << ": rows must have unit norm (max deviation " << dev << " > " << tol << ")";
      throw NormError(msg.str());
    }
  }

  bool operator==(const EmbeddingSet&) const = default;

 private:
  Layout layout_;
  std::size_t dim_;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// Header `class,instance,aug,c0,...,c{d-1}`; zero-based indices; 17 significant digits.
inline std::string to_csv(const EmbeddingSet& u) {
  std::string out = "class,instance,aug";
  for (std::size_t c = 0; c < u.dim(); ++c) out += ",c" + std::to_string(c);
  out += '\n';
  for (std::size_t i = 0; i < u.classes(); ++i)
    for (std::size_t j = 0; j < u.instances(); ++j)
      for (std::size_t k = 0; k < u.augmentations(); ++k) {
        out += std::to_string(i) + ',' + std::to_string(j) + ',' + std::to_string(k);
        for (double x : u.row(u.index(i, j, k))) {
          out += ',';
          out += io::format_real(x);
        }
        out += '\n';
      }
  return out;
}

/// Inverse of to_csv. Rows must appear in canonical (class, instance, aug) order.
inline EmbeddingSet embedding_set_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ShapeError("embedding CSV: empty input");
  const auto header = io::split_csv_line(line);
  if (header.size() < 4 || header[0] != "class" || header[1] != "instance" || header[2] != "aug")
    throw ShapeError("embedding CSV: bad header");
  const std::size_t dim = header.size() - 3;
  std::vector<std::array<std::size_t, 3>> ids;
  std::vector<double> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = io::split_csv_line(line);
    if (fields.size() != dim + 3) throw ShapeError("embedding CSV: ragged row");
    ids.push_back({std::stoul(fields[0]), std::stoul(fields[1]), std::stoul(fields[2])});
    for (std::size_t c = 0; c < dim; ++c) data.push_back(io::parse_real(fields[3 + c]));
  }
  if (ids.empty()) throw ShapeError("embedding CSV: no rows");
  Layout layout{ids.back()[0] + 1, ids.back()[1] + 1, ids.back()[2] + 1};
  EmbeddingSet set(layout, dim, std::move(data));
  for (std::size_t r = 0; r < ids.size(); ++r)
    if (set.index(ids[r][0], ids[r][1], ids[r][2]) != r)
      throw ShapeError("embedding CSV: rows out of canonical order");
  return set;
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_EMBEDDING_SET_HPP_
