#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace tvsid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error categories. Callers that only care about "something went wrong"
// can catch std::exception; the bench distinguishes numerical faults
// (recorded per run) from argument errors (abort).

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace tvsid
