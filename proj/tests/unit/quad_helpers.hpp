#pragma once

#include <memory>

#include "bilevel/testbeds.hpp"

namespace test_helpers {

using bilevel::Matrix;
using bilevel::Vector;

/// g = 1/2 y^T A y - (B x + b)^T y, f = 1/2 ||x||^2 + 1/2 ||y - y_d||^2 (+ p^T x).
inline std::shared_ptr<bilevel::QuadraticBilevel> quad(const Matrix& A, const Matrix& B,
                                                       const Vector& b, const Vector& y_d,
                                                       bilevel::FeasibleSet region = {}) {
  const auto n = B.cols(), m = A.rows();
  auto d = bilevel::QuadraticBilevel::standard_form(A, B, b, Matrix::Identity(n, n),
                                                    Vector::Zero(n), Matrix::Identity(m, m), y_d);
  return std::make_shared<bilevel::QuadraticBilevel>("test", d, region);
}

inline Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d[i++] = x;
  return d.asDiagonal();
}

inline Vector vec(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d[i++] = x;
  return d;
}

}  // namespace test_helpers
