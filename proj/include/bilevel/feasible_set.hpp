#pragma once

#include <variant>
#include <vector>

#include "bilevel/types.hpp"

namespace bilevel {

/// Closed convex set for the outer variable with an exact Euclidean
/// projection.
class FeasibleSet {
 public:
  struct AllSpace {};
  struct Box {
    Vector lower;
    Vector upper;
  };
  struct Ball {
    Vector center;
    double radius;
  };

  enum class Kind { all_space, box, ball };

  FeasibleSet() = default;

  static FeasibleSet all_space();
  /// Requires lower <= upper componentwise.
  static FeasibleSet box(Vector lower, Vector upper);
  /// Requires radius > 0.
  static FeasibleSet ball(Vector center, double radius);

  Kind kind() const;
  const Box& as_box() const { return std::get<Box>(shape_); }
  const Ball& as_ball() const { return std::get<Ball>(shape_); }

  Vector project(const Vector& p) const;
  bool contains(const Vector& x, double tol = 1e-12) const;
  /// max ||u - v|| over the set; +inf for all_space.
  double diameter() const;
  bool bounded() const { return kind() != Kind::all_space; }

  /// Corner points of a box (2^n of them). Empty for other kinds or n > 20.
  std::vector<Vector> box_vertices() const;

 private:
  std::variant<AllSpace, Box, Ball> shape_{AllSpace{}};
};

inline Vector project(const FeasibleSet& set, const Vector& p) { return set.project(p); }

}  // namespace bilevel
