#ifndef COLLAPSE_LAB_ERRORS_HPP_
#define COLLAPSE_LAB_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace collapse_lab {

/// Parameter outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Embedding dimension too small for the requested construction.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two objects disagree on (m, n, p, d) or a table has the wrong size.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rows that were required to lie on the unit sphere do not.
class NormError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_ERRORS_HPP_
