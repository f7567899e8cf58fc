#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace lapcert {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Input has the wrong shape for the operation (vector/matrix dimension mismatch).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point, neighbourhood or parameter lies outside the admissible domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative procedure (Newton, power iteration) failed to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or model description is malformed.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace lapcert
