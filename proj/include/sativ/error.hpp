#pragma once

#include <stdexcept>
#include <string>

namespace sativ {

/// Bad input: malformed data, invalid design, unidentified request.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A linear system that should be solved is singular or too ill-conditioned.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double condition = 0.0)
      : std::runtime_error(what), condition_(condition) {}

  double condition() const { return condition_; }

 private:
  double condition_;
};

}  // namespace sativ
