#pragma once

#include <stdexcept>
#include <string>

namespace lod {

/// Invalid input or configuration (bad grid exponents, unknown keys, missing files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical contract was violated: singular system, residual too large,
/// rank-deficient constraints, indefinite Gram matrix.
class NumericalError : public std::runtime_error {
 public:
  enum class Kind { Singular, Residual, RankDeficient, Indefinite, Other };

  NumericalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Rank-deficient constraint block; `row()` is the offending constraint row
/// (callers translate it to a coarse node id before rethrowing).
class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(std::size_t row, const std::string& what)
      : NumericalError(Kind::RankDeficient, what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace lod
