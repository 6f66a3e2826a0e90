// Common dense types and error classes shared by every cellhom module.
#ifndef CELLHOM_TYPES_HPP
#define CELLHOM_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cellhom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

// Small stack-allocated vectors for per-bond work in the hot loops (d <= 3).
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

using MatrixRef = Eigen::Ref<Matrix>;
using ConstMatrixRef = Eigen::Ref<const Matrix>;

/// Violated precondition on user-supplied data (bad lattice, bad config, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical evaluation that produced non-finite values or otherwise failed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cellhom

#endif  // CELLHOM_TYPES_HPP
