#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace bilevel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid user input: bad constants, inconsistent dimensions, unsupported
/// solver/class combinations. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical assumption failed at run time (e.g. an inner Hessian that is
/// not safely positive definite). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ConvexityClass { strongly_convex, convex, nonconvex };

std::string to_string(ConvexityClass c);
ConvexityClass convexity_from_string(const std::string& s);

}  // namespace bilevel
