#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace attnprune {

// Operand shapes do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range argument (rank, ratio, empty set, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Overflow, non-finite values, failed factorization or iteration cap.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A softmax row with no unmasked entry.
class DegenerateRowError : public NumericError {
 public:
  DegenerateRowError(std::size_t row, const std::string& what)
      : NumericError(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Gradient descent produced a non-finite iterate.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::size_t epoch, double mask_norm, const std::string& what)
      : NumericError(what), epoch_(epoch), mask_norm_(mask_norm) {}
  std::size_t epoch() const noexcept { return epoch_; }
  double mask_norm() const noexcept { return mask_norm_; }

 private:
  std::size_t epoch_;
  double mask_norm_;
};

// An analytical check was called on an instance outside its assumptions.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace attnprune
