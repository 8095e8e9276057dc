#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace selfcal {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Input outside the mathematical domain of an operation (angle range,
/// support index, duplicate DoAs, degenerate calibration).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Operand shapes that do not agree.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A dense construction would exceed the configured memory budget.
class ResourceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace selfcal
